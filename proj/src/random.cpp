#include "wiretap/random.hpp"

namespace wiretap {

Mat GaussianRng::psd_with_trace(int n, double trace) {
  Mat a = gaussian_matrix(n, n);
  Mat s = symmetrize(a * a.transpose());
  double t = s.trace();
  if (t <= 0) return Mat::Identity(n, n) * (trace / n);
  return s * (trace / t);
}

}  // namespace wiretap
