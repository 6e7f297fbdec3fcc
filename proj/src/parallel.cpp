#include "dataprog/parallel.hpp"

#include <omp.h>

namespace dprog {

int max_threads() { return omp_get_max_threads(); }

}  // namespace dprog
