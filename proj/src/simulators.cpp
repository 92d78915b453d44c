#include "tvgp/simulators.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <random>
#include <stdexcept>

namespace tvgp {

EnvConfig EnvConfig::defaults() {
  EnvConfig cfg;
  cfg.spatial_grid.resize(15);
  for (int k = 0; k < 15; ++k) cfg.spatial_grid[k] = 0.5 + k / 7.0;
  cfg.temporal_grid.resize(100);
  for (int k = 0; k < 100; ++k) cfg.temporal_grid[k] = 0.3 + 0.6 * k;
  cfg.input_box.lo = Eigen::Vector4d(7.0, 0.01, 30.01, 0.02);
  cfg.input_box.hi = Eigen::Vector4d(13.0, 3.0, 30.295, 0.12);
  return cfg;
}

void EnvConfig::validate() const {
  input_box.validate();
  if (input_box.dim() != 4) throw std::invalid_argument("EnvConfig: input box must be 4-D");
  auto strictly_increasing = [](const Eigen::VectorXd& g) {
    for (Eigen::Index i = 1; i < g.size(); ++i)
      if (!(g[i] > g[i - 1])) return false;
    return g.size() >= 1;
  };
  if (!strictly_increasing(spatial_grid) || !strictly_increasing(temporal_grid))
    throw std::invalid_argument("EnvConfig: grids must be strictly increasing");
  if ((temporal_grid.array() <= 0.0).any())
    throw std::invalid_argument("EnvConfig: temporal grid must be positive");
}

Tensor env_field_raw(const Eigen::VectorXd& x, const EnvConfig& cfg) {
  cfg.validate();
  if (x.size() != 4) throw std::invalid_argument("env_field_raw: input must be 4-D");
  for (int h = 0; h < 4; ++h)
    if (x[h] < cfg.input_box.lo[h] - 1e-12 || x[h] > cfg.input_box.hi[h] + 1e-12) {
      std::cerr << "env simulator: input coordinate " << h + 1 << " = " << x[h]
                << " lies outside the nominal box\n";
      break;
    }

  const double mass = x[0], spill_loc = x[1], spill_time = x[2], diffusion = x[3];
  const int r1 = static_cast<int>(cfg.spatial_grid.size());
  const int r2 = static_cast<int>(cfg.temporal_grid.size());
  const double root4pi = std::sqrt(4.0 * M_PI);

  Tensor out({r1, r2});
  for (int i = 0; i < r1; ++i) {
    const double s = cfg.spatial_grid[i];
    for (int j = 0; j < r2; ++j) {
      const double t = cfg.temporal_grid[j];
      double c = mass / std::sqrt(4.0 * M_PI * diffusion * t) *
                 std::exp(-s * s / (4.0 * diffusion * t));
      if (t > spill_time) {
        const double dt = t - spill_time;
        const double ds = s - spill_loc;
        c += mass / std::sqrt(4.0 * M_PI * diffusion * dt) *
             std::exp(-ds * ds / (4.0 * diffusion * dt));
      }
      out.at({i, j}) = root4pi * c;
    }
  }
  return out;
}

Tensor env_simulate(const Eigen::VectorXd& x, const EnvConfig& cfg) {
  return log_shift(env_field_raw(x, cfg));
}

SeirPatchConfig SeirPatchConfig::defaults() {
  SeirPatchConfig cfg;
  const int np = 15;
  cfg.populations.resize(np);
  cfg.commuters = Eigen::MatrixXd::Zero(np, np);

  // Fixed seeded network: populations spread over roughly an order of
  // magnitude, commuting flows decaying with patch distance so the epidemic
  // wave leaves the seed patch in a reproducible spatial order.
  std::mt19937_64 rng(150220u);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int a = 0; a < np; ++a)
    cfg.populations[a] = std::round(30000.0 * std::pow(10.0, unif(rng)));
  for (int a = 0; a < np; ++a) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(np);
    for (int b = 0; b < np; ++b) {
      if (b == a) continue;
      w[b] = std::exp(-std::abs(a - b) / 1.5) * (0.5 + unif(rng));
    }
    w *= 0.1 * cfg.populations[a] / w.sum();
    cfg.commuters.row(a) = w;
  }

  cfg.rate_box.lo = Eigen::Vector3d(1.0, 0.25, 0.25);
  cfg.rate_box.hi = Eigen::Vector3d(2.0, 1.0, 1.0);
  return cfg;
}

void SeirPatchConfig::validate() const {
  const int np = patches();
  if (np < 1) throw std::invalid_argument("SeirPatchConfig: need at least one patch");
  if (commuters.rows() != np || commuters.cols() != np)
    throw std::invalid_argument("SeirPatchConfig: commuter matrix shape mismatch");
  if ((commuters.array() < 0.0).any())
    throw std::invalid_argument("SeirPatchConfig: commuter flows must be nonnegative");
  for (int a = 0; a < np; ++a) {
    double outflow = commuters.row(a).sum() - commuters(a, a);
    if (outflow > populations[a] + 1e-9)
      throw std::invalid_argument("SeirPatchConfig: outflow from patch " + std::to_string(a) +
                                  " exceeds its population");
  }
  if (seed_patch < 0 || seed_patch >= np)
    throw std::invalid_argument("SeirPatchConfig: seed patch out of range");
  if (initial_infected < 0 || initial_infected > populations[seed_patch])
    throw std::invalid_argument("SeirPatchConfig: invalid initial infected count");
  if (steps < 1) throw std::invalid_argument("SeirPatchConfig: steps must be >= 1");
  rate_box.validate();
}

Tensor seir_simulate(const Eigen::VectorXd& rates, const SeirPatchConfig& cfg) {
  const Tensor full = seir_simulate_full(rates, cfg);
  const int np = cfg.patches();
  Tensor out({np, cfg.steps});
  const Eigen::Index block = static_cast<Eigen::Index>(np) * cfg.steps;
  out.vec() = full.vec().segment(2 * block, block);  // the I compartment
  return out;
}

Tensor seir_simulate_full(const Eigen::VectorXd& rates, const SeirPatchConfig& cfg) {
  cfg.validate();
  if (rates.size() != 3)
    throw std::invalid_argument("seir_simulate: rates must be (beta, alpha, gamma)");
  const double beta = rates[0], alpha = rates[1], gamma = rates[2];
  for (int h = 0; h < 3; ++h)
    if (rates[h] < cfg.rate_box.lo[h] - 1e-12 || rates[h] > cfg.rate_box.hi[h] + 1e-12) {
      std::cerr << "seir simulator: rate " << h + 1 << " = " << rates[h]
                << " lies outside the nominal box\n";
      break;
    }

  const int np = cfg.patches();
  const double dt = 0.5;  // two timesteps per day

  // Presence weights by phase: residents of a located in b.
  Eigen::MatrixXd work = cfg.commuters;
  for (int a = 0; a < np; ++a)
    work(a, a) = cfg.populations[a] - (cfg.commuters.row(a).sum() - cfg.commuters(a, a));
  const Eigen::VectorXd present_work = work.colwise().sum();

  Eigen::VectorXd s = cfg.populations, e = Eigen::VectorXd::Zero(np),
                  infected = Eigen::VectorXd::Zero(np), rec = Eigen::VectorXd::Zero(np);
  s[cfg.seed_patch] -= cfg.initial_infected;
  infected[cfg.seed_patch] = cfg.initial_infected;

  auto half_step = [&](bool work_phase) {
    Eigen::VectorXd exposure_rate(np);
    if (work_phase) {
      const Eigen::VectorXd infected_frac = infected.array() / cfg.populations.array();
      const Eigen::VectorXd infected_present = work.transpose() * infected_frac;
      Eigen::VectorXd lambda(np);
      for (int b = 0; b < np; ++b)
        lambda[b] = present_work[b] > 0.0 ? beta * infected_present[b] / present_work[b] : 0.0;
      exposure_rate = (work * lambda).array() / cfg.populations.array();
    } else {
      exposure_rate = beta * infected.array() / cfg.populations.array();
    }
    const Eigen::VectorXd new_e = (s.array() * exposure_rate.array()).matrix() * dt;
    const Eigen::VectorXd new_i = alpha * dt * e;
    const Eigen::VectorXd new_r = gamma * dt * infected;
    s -= new_e;
    e += new_e - new_i;
    infected += new_i - new_r;
    rec += new_r;
    for (int a = 0; a < np; ++a) {
      const double floor = -1e-9 * cfg.populations[a];
      for (double* comp : {&s[a], &e[a], &infected[a], &rec[a]}) {
        if (*comp < floor)
          throw std::runtime_error("seir_simulate: negative compartment in patch " +
                                   std::to_string(a) + "; reduce the step size");
        if (*comp < 0.0) *comp = 0.0;
      }
    }
  };

  Tensor out({4, np, cfg.steps});
  for (int day = 0; day < cfg.steps; ++day) {
    half_step(true);
    half_step(false);
    for (int a = 0; a < np; ++a) {
      out.at({0, a, day}) = s[a];
      out.at({1, a, day}) = e[a];
      out.at({2, a, day}) = infected[a];
      out.at({3, a, day}) = rec[a];
    }
  }
  return out;
}

Tensor log_shift(const Tensor& y) {
  Tensor out = y;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (y.vec()[i] < -1.0)
      throw std::domain_error("log_shift: entry " + std::to_string(i) + " is below -1");
    out.vec()[i] = std::log1p(y.vec()[i]);
  }
  return out;
}

Tensor log_shift_inverse(const Tensor& f) {
  Tensor out = f;
  for (Eigen::Index i = 0; i < out.size(); ++i) out.vec()[i] = std::expm1(f.vec()[i]);
  return out;
}

std::vector<int> rank_spatial_coordinate(const Tensor& outputs) {
  if (outputs.order() != 3)
    throw std::invalid_argument("rank_spatial_coordinate: expects a (runs, patches, times) stack");
  const int n = outputs.extent(0), r1 = outputs.extent(1), r2 = outputs.extent(2);

  std::vector<int> reference;
  for (int run = 0; run < n; ++run) {
    std::vector<int> peak(static_cast<size_t>(r1));
    for (int i = 0; i < r1; ++i) {
      int arg = 0;
      double best = outputs.at({run, i, 0});
      for (int t = 1; t < r2; ++t) {
        const double v = outputs.at({run, i, t});
        if (v > best) {  // strict: ties keep the earliest time
          best = v;
          arg = t;
        }
      }
      peak[static_cast<size_t>(i)] = arg;
    }

    std::vector<int> order(static_cast<size_t>(r1));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return peak[static_cast<size_t>(a)] < peak[static_cast<size_t>(b)];
    });
    for (size_t k = 1; k < order.size(); ++k)
      if (peak[static_cast<size_t>(order[k])] == peak[static_cast<size_t>(order[k - 1])])
        std::cerr << "rank_spatial_coordinate: patches " << order[k - 1] << " and "
                  << order[k] << " peak at the same time in run " << run << "\n";

    std::vector<int> ranks(static_cast<size_t>(r1));
    for (int pos = 0; pos < r1; ++pos) ranks[static_cast<size_t>(order[pos])] = pos + 1;

    if (run == 0) {
      reference = ranks;
    } else if (ranks != reference) {
      for (int i = 0; i < r1; ++i)
        if (ranks[static_cast<size_t>(i)] != reference[static_cast<size_t>(i)])
          throw std::runtime_error(
              "rank_spatial_coordinate: peak ordering differs between run 0 and run " +
              std::to_string(run) + " at patch " + std::to_string(i));
    }
  }
  return reference;
}

}  // namespace tvgp
