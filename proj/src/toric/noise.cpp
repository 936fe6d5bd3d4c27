#include "toric/noise.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace toric {

void ChannelParam::validate() const {
  if (!(p >= 0.0) || p >= 1.0)
    throw std::invalid_argument("channel probability must be in [0,1), got " + std::to_string(p));
  if (model == ChannelModel::depolarizing && 4.0 * p / 3.0 > 1.0)
    throw std::invalid_argument("depolarizing strength q = 4p/3 exceeds 1");
  if (!(j > 0.0)) throw std::invalid_argument("energy unit J must be positive");
}

void QubitPrior::normalize() {
  for (auto& t : q) {
    double s = t[0] + t[1] + t[2] + t[3];
    if (s > 0.0)
      for (double& v : t) v /= s;
  }
}

PauliFrame sample_error(const Lattice& lat, const ChannelParam& ch, rng::Stream& rng) {
  ch.validate();
  PauliFrame f(lat.n_qubits());
  if (ch.model == ChannelModel::depolarizing) {
    for (int q = 0; q < lat.n_qubits(); ++q) {
      double u = rng.next_double();
      if (u >= ch.p) continue;
      double r = u / ch.p;  // uniform again given the error branch
      if (r < 1.0 / 3.0)
        f.x.set(q, true);
      else if (r < 2.0 / 3.0) {
        f.x.set(q, true);
        f.z.set(q, true);
      } else
        f.z.set(q, true);
    }
  } else {
    for (int q = 0; q < lat.n_qubits(); ++q) {
      if (rng.next_bool(ch.p)) f.x.set(q, true);
      if (rng.next_bool(ch.p)) f.z.set(q, true);
    }
  }
  return f;
}

QubitPrior prior_from_channel(const Lattice& lat, const ChannelParam& ch) {
  ch.validate();
  std::array<double, 4> t;
  if (ch.model == ChannelModel::depolarizing)
    t = {1.0 - ch.p, ch.p / 3.0, ch.p / 3.0, ch.p / 3.0};
  else
    t = {(1.0 - ch.p) * (1.0 - ch.p), ch.p * (1.0 - ch.p), ch.p * ch.p, (1.0 - ch.p) * ch.p};
  QubitPrior prior;
  prior.q.assign(lat.n_qubits(), t);
  return prior;
}

double nishimori_beta(double p, double j) {
  if (!(p > 0.0) || p >= 1.0)
    throw std::invalid_argument("nishimori_beta requires 0 < p < 1, got " + std::to_string(p));
  return std::log(3.0 * (1.0 - p) / p) / j;
}

double chain_energy(const PauliFrame& frame, double j) {
  return j * frame.weight();
}

}  // namespace toric
