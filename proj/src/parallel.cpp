#include "svlab/parallel.hpp"

namespace svlab::parallel {

void set_threads(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

int threads() { return omp_get_max_threads(); }

}  // namespace svlab::parallel
