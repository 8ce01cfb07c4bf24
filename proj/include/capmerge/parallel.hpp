// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace capmerge {

// jobs == 0 means "all hardware threads"; jobs == 1 is the serial reference
// path. Callers must make fn(i) independent across i so that results are
// identical for every jobs value.
inline int effective_jobs(int jobs) {
#ifdef _OPENMP
  if (jobs <= 0) return omp_get_max_threads();
  return jobs;
#else
  (void)jobs;
  return 1;
#endif
}

template <typename Fn>
void parallel_for(long long n, int jobs, Fn&& fn) {
  const int threads = effective_jobs(jobs);
  if (threads <= 1) {
    for (long long i = 0; i < n; ++i) fn(i);
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 8) num_threads(threads)
  for (long long i = 0; i < n; ++i) fn(i);
#else
  for (long long i = 0; i < n; ++i) fn(i);
#endif
}

}  // namespace capmerge
