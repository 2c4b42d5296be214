#include "m1dose/stepper.hpp"

#include "m1dose/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace m1dose {

BeamSpec BeamSpec::make(double energy, double protons, int axis, Point3 isocenter) {
  BeamSpec b;
  b.energy = energy;
  b.protons = protons;
  b.energy_spread = 0.01 * energy;
  b.axis = axis;
  b.isocenter = isocenter;
  return b;
}

double BeamSpec::energy_profile(double e) const {
  const double z = (e - energy) / energy_spread;
  return protons / (std::sqrt(2.0 * std::numbers::pi) * energy_spread) * std::exp(-0.5 * z * z);
}

double BeamSpec::spatial_profile(const Point3& x, int dim) const {
  double s = 1.0;
  for (int k = 0; k < dim; ++k) {
    if (k == axis) {
      continue;
    }
    const double z = (x[k] - isocenter[k]) / spot_sigma;
    s *= std::exp(-0.5 * z * z) / (std::sqrt(2.0 * std::numbers::pi) * spot_sigma);
  }
  return s;
}

double BeamSpec::fluence(const Point3& x, double e, int dim) const {
  return energy_profile(e) * spatial_profile(x, dim);
}

template <int Dim>
Stepper<Dim>::Stepper(const StructuredGrid& grid, const DiscreteOperators& ops,
                      std::vector<BeamSpec> beams, StepperOptions options)
    : grid_(grid), ops_(ops), beams_(std::move(beams)), options_(options) {
  if (grid.dim != Dim || ops.dim != Dim) {
    throw ValidationError("stepper: grid dimension does not match the solver");
  }
  if (!(options_.cfl > 0.0 && options_.cfl <= 1.0)) {
    throw ValidationError("stepper: cfl must lie in (0, 1]");
  }
  for (const auto& b : beams_) {
    if (b.axis < 0 || b.axis >= Dim || !(b.energy > 0.0) || !(b.energy_spread > 0.0) ||
        !(b.spot_sigma > 0.0) || b.protons < 0.0 || !(b.collimation >= 0.0 && b.collimation < 1.0)) {
      throw ValidationError("stepper: invalid beam specification");
    }
  }

  const std::size_t n = ops.num_nodes();
  cfl_factor_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = ops.boundary_viscosity[i];
    for (const auto& ne : ops.node_edges(i)) {
      sum += ops.edges[ne.edge].viscosity;
    }
    cfl_factor_[i] = 2.0 * sum / ops.lumped_mass[i];
  }

  // Facets on the lower face of a beam axis take the beam as external state;
  // everywhere else u_hat = u_i and the boundary term vanishes.
  inflow_offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = grid.position(i);
    for (const auto& f : ops.node_facets(i)) {
      if (f.side != 0) {
        continue;
      }
      InflowFacet in;
      for (std::size_t b = 0; b < beams_.size(); ++b) {
        if (beams_[b].axis == f.axis) {
          in.beams.emplace_back(b, beams_[b].spatial_profile(x, Dim));
        }
      }
      if (in.beams.empty()) {
        continue;
      }
      in.node = static_cast<std::uint32_t>(i);
      in.weight = f.weight;
      in.normal = to_vec<Dim>(f.normal);
      in.direction[f.axis] = 1.0;
      inflow_.push_back(std::move(in));
    }
    inflow_offsets_[i + 1] = static_cast<std::uint32_t>(inflow_.size());
  }

  u_.resize(n);
  flux_.resize(n);
  bars_.ij.resize(ops.edges.size());
  bars_.ji.resize(ops.edges.size());
  boundary_bars_.resize(inflow_.size());
  rate_.resize(n);
  stopping_.resize(n);
}

template <int Dim>
double Stepper<Dim>::max_energy() const {
  double e0 = 0.0;
  for (const auto& b : beams_) {
    e0 = std::max(e0, b.energy);
  }
  return 1.1 * e0;
}

template <int Dim>
std::vector<double> Stepper<Dim>::stopping_powers(double energy) const {
  const double e = std::max(energy, constants::min_energy);
  std::vector<double> per_material(ops_.materials.size());
  for (std::size_t m = 0; m < per_material.size(); ++m) {
    per_material[m] = stopping_power(ops_.materials[m], e);
  }
  std::vector<double> s(ops_.num_nodes());
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = per_material[ops_.node_material[i]];
  }
  return s;
}

template <int Dim>
typename Stepper<Dim>::Field Stepper<Dim>::initial_field(double e_max) const {
  Field field;
  field.energy = e_max;
  const auto s = stopping_powers(e_max);
  field.su.resize(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    field.su[i].psi0 = s[i] * fluence_floor;
  }
  return field;
}

template <int Dim>
std::vector<Moment<Dim>> Stepper<Dim>::inflow_states(double energy) const {
  std::vector<double> profile(beams_.size());
  for (std::size_t b = 0; b < beams_.size(); ++b) {
    profile[b] = beams_[b].energy_profile(energy);
  }
  std::vector<Moment<Dim>> states(inflow_.size());
  for (std::size_t k = 0; k < inflow_.size(); ++k) {
    Moment<Dim> s;
    for (const auto& [b, spatial] : inflow_[k].beams) {
      const double psi0 = profile[b] * spatial;
      s.psi0 += psi0;
      s.psi1[beams_[b].axis] += beams_[b].collimation * psi0;
    }
    if (!(s.psi0 >= fluence_floor)) {
      s = Moment<Dim>{};
      s.psi0 = fluence_floor;
    }
    states[k] = s;
  }
  return states;
}

template <int Dim>
double Stepper<Dim>::compute_energy_step(const Field& field) const {
  const auto s = stopping_powers(field.energy);
  double worst = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    worst = std::max(worst, cfl_factor_[i] / s[i]);
  }
  double step = options_.cfl / worst;
  if (field.energy - step < constants::min_energy) {
    step = field.energy - constants::min_energy;
  }
  return step;
}

template <int Dim>
void Stepper<Dim>::check_realizable(const Field& field, const char* where) {
  ++checks_;
  for (std::size_t i = 0; i < field.su.size(); ++i) {
    if (!is_realizable(field.su[i])) {
      const auto x = grid_.position(i);
      std::ostringstream msg;
      msg.precision(17);
      msg << where << ": realizability lost at node " << i << " (x = " << x[0] << ", " << x[1]
          << ", " << x[2] << ") at E = " << field.energy << " MeV: S psi0 = " << field.su[i].psi0
          << ", |S psi1| = " << norm<Dim>(field.su[i].psi1);
      throw SolverFailure(msg.str());
    }
  }
}

template <int Dim>
void Stepper<Dim>::scattering_half_step(Field& field, double e_from, double e_to) {
  if (!options_.scattering) {
    field.energy = e_to;
    return;
  }
  const double e_mid = 0.5 * (e_from + e_to);
  const auto t = material_scattering_powers(ops_, e_mid);
  const auto mt = scattering_mass(ops_, t);
  const auto s = stopping_powers(e_mid);
  const double width = e_from - e_to;
  for (std::size_t i = 0; i < field.su.size(); ++i) {
    const double factor = std::exp(-mt[i] / (ops_.lumped_mass[i] * s[i]) * width);
    for (int k = 0; k < Dim; ++k) {
      field.su[i].psi1[k] *= factor;
    }
  }
  field.energy = e_to;
}

template <int Dim>
void Stepper<Dim>::to_moments(const Field& field, std::vector<Moment<Dim>>& u) const {
  const std::size_t n = field.su.size();
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = (1.0 / stopping_[i]) * field.su[i];
  }
}

template <int Dim>
void Stepper<Dim>::compute_bar_states() {
  const std::size_t n = u_.size();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    flux_[i] = flux_unchecked(u_[i]);
  }
  const auto& edges = ops_.edges;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ee = 0; ee < static_cast<std::ptrdiff_t>(edges.size()); ++ee) {
    const auto& e = edges[ee];
    bars_.ij[ee] = bar_state<Dim>(u_[e.i], u_[e.j], flux_[e.i], flux_[e.j], to_vec<Dim>(e.c_ij),
                             e.viscosity);
    bars_.ji[ee] = bar_state<Dim>(u_[e.j], u_[e.i], flux_[e.j], flux_[e.i], to_vec<Dim>(e.c_ji),
                             e.viscosity);
  }
}

template <int Dim>
void Stepper<Dim>::compute_boundary_bars(double energy) {
  const auto states = inflow_states(energy);
  for (std::size_t k = 0; k < inflow_.size(); ++k) {
    const auto i = inflow_[k].node;
    boundary_bars_[k] = boundary_bar_state<Dim>(u_[i], states[k], flux_[i], flux_unchecked(states[k]),
                                           inflow_[k].normal);
  }
}

// rate_i = (1/m_i) [sum_j 2 d_ij (bar u_ij - u_i) + sum_Gamma w (bar u^Gamma - u_i)]
template <int Dim>
void Stepper<Dim>::transport_rates() {
  const std::size_t n = u_.size();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    Moment<Dim> acc;
    for (const auto& ne : ops_.node_edges(i)) {
      const auto& e = ops_.edges[ne.edge];
      const auto& bar = ne.is_first ? bars_.ij[ne.edge] : bars_.ji[ne.edge];
      acc += (2.0 * e.viscosity) * (bar - u_[i]);
    }
    for (auto k = inflow_offsets_[i]; k < inflow_offsets_[i + 1]; ++k) {
      acc += (constants::max_wave_speed * inflow_[k].weight) * (boundary_bars_[k] - u_[i]);
    }
    rate_[i] = acc;
  }
}

template <int Dim>
std::vector<Moment<Dim>> Stepper<Dim>::low_order_rate(const Field& field, bool include_scattering) {
  stopping_ = stopping_powers(field.energy);
  to_moments(field, u_);
  compute_bar_states();
  compute_boundary_bars(field.energy);
  transport_rates();
  std::vector<Moment<Dim>> rate(rate_.size());
  std::vector<double> mt;
  if (include_scattering && options_.scattering) {
    mt = scattering_mass(ops_, field.energy);
  }
  for (std::size_t i = 0; i < rate.size(); ++i) {
    rate[i] = (1.0 / ops_.lumped_mass[i]) * rate_[i];
    if (!mt.empty()) {
      for (int k = 0; k < Dim; ++k) {
        rate[i].psi1[k] -= mt[i] / ops_.lumped_mass[i] * u_[i].psi1[k];
      }
    }
  }
  return rate;
}

template <int Dim>
typename Stepper<Dim>::Field Stepper<Dim>::transport_stage(const Field& field, double step) {
  const std::size_t n = field.su.size();
  stopping_ = stopping_powers(field.energy);
  to_moments(field, u_);
  compute_bar_states();
  compute_boundary_bars(field.energy);
  transport_rates();

  const bool limited = options_.scheme == Scheme::mcl;
  if (limited) {
    // Low-order surrogate of (Su)' including the lumped scattering term.
    std::vector<double> node_mt;
    std::vector<double> edge_mt;
    if (options_.scattering) {
      const auto t = material_scattering_powers(ops_, field.energy);
      node_mt = scattering_mass(ops_, t);
      edge_mt = edge_scattering_mass(ops_, t);
    }
    surrogate_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      surrogate_[i] = (1.0 / ops_.lumped_mass[i]) * rate_[i];
      if (!node_mt.empty()) {
        for (int k = 0; k < Dim; ++k) {
          surrogate_[i].psi1[k] -= node_mt[i] / ops_.lumped_mass[i] * u_[i].psi1[k];
        }
      }
    }
    local_bounds<Dim>(u_, bars_, ops_, bounds_);
    const std::size_t num_edges = ops_.edges.size();
    limited_.resize(num_edges);
    std::ptrdiff_t bad_edge = -1;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ee = 0; ee < static_cast<std::ptrdiff_t>(num_edges); ++ee) {
      const auto& e = ops_.edges[ee];
      if (!is_realizable(bars_.ij[ee]) || !is_realizable(bars_.ji[ee])) {
#pragma omp critical(m1dose_bad_edge)
        bad_edge = bad_edge < 0 ? ee : std::min(bad_edge, ee);
        continue;
      }
      AntidiffusiveFlux<Dim> raw{};
      if (!options_.zero_antidiffusion) {
        raw = raw_antidiffusive_flux<Dim>(e, u_, surrogate_, edge_mt.empty() ? 0.0 : edge_mt[ee]);
      }
      const auto star = limit_components(raw, bars_.ij[ee], bars_.ji[ee], bounds_.min[e.i],
                                         bounds_.max[e.i], bounds_.min[e.j], bounds_.max[e.j],
                                         e.viscosity);
      limited_[ee] = idp_correction(star, bars_.ij[ee], bars_.ji[ee], e.viscosity).flux;
    }
    if (bad_edge >= 0) {
      const auto& e = ops_.edges[bad_edge];
      std::ostringstream msg;
      msg.precision(17);
      msg << "transport_stage: bar state of edge (" << e.i << ", " << e.j
          << ") not realizable at E = " << field.energy << " MeV";
      throw SolverFailure(msg.str());
    }
    correction_.resize(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      Moment<Dim> acc;
      for (const auto& ne : ops_.node_edges(i)) {
        if (ne.is_first) {
          acc += limited_[ne.edge];
        } else {
          acc -= limited_[ne.edge];
        }
      }
      correction_[i] = acc;
    }
  }

  Field out;
  out.energy = field.energy - step;
  out.su.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto rhs = rate_[i];
    if (limited) {
      rhs += correction_[i];
    }
    out.su[i] = field.su[i] + (step / ops_.lumped_mass[i]) * rhs;
  }
  check_realizable(out, "transport_stage");
  return out;
}

template <int Dim>
typename Stepper<Dim>::Field Stepper<Dim>::heun_transport_step(const Field& field, double step) {
  const auto first = transport_stage(field, step);
  const auto second = transport_stage(first, step);
  Field out;
  out.energy = first.energy;
  out.su.resize(field.su.size());
  for (std::size_t i = 0; i < out.su.size(); ++i) {
    out.su[i] = 0.5 * field.su[i] + 0.5 * second.su[i];
  }
  check_realizable(out, "heun_transport_step");
  return out;
}

template <int Dim>
typename Stepper<Dim>::Field Stepper<Dim>::strang_step(const Field& field, double step) {
  const double e_top = field.energy;
  const double e_half = e_top - 0.5 * step;
  const double e_bottom = e_top - step;

  Field work = field;
  scattering_half_step(work, e_top, e_half);
  check_realizable(work, "scattering_half_step");
  // The transport substep covers the whole interval from the top level.
  work.energy = e_top;
  work = heun_transport_step(work, step);
  scattering_half_step(work, e_half, e_bottom);
  check_realizable(work, "scattering_half_step");
  work.energy = e_bottom;
  return work;
}

template <int Dim>
MarchResult<Dim> Stepper<Dim>::strang_march(Field field, DoseAccumulator& dose,
                                            const Progress& progress) {
  check_realizable(field, "initial condition");
  MarchResult<Dim> result;
  while (field.energy > constants::min_energy) {
    const double step = compute_energy_step(field);
    auto next = strang_step(field, step);
    if (next.energy - constants::min_energy < 1e-12 * constants::min_energy) {
      next.energy = constants::min_energy;
    }
    accumulate_dose(dose, field, next, step);
    field = std::move(next);
    ++result.levels;
    if (progress) {
      LevelInfo info;
      info.level = result.levels;
      info.energy = field.energy;
      info.step = step;
      info.min_psi0 = field.su.empty() ? 0.0 : field.su[0].psi0;
      info.max_psi0 = info.min_psi0;
      const auto s = stopping_powers(field.energy);
      for (std::size_t i = 0; i < field.su.size(); ++i) {
        const double psi0 = field.su[i].psi0 / s[i];
        if (i == 0) {
          info.min_psi0 = info.max_psi0 = psi0;
        }
        info.min_psi0 = std::min(info.min_psi0, psi0);
        info.max_psi0 = std::max(info.max_psi0, psi0);
      }
      progress(info, field);
    }
  }
  result.field = std::move(field);
  result.realizability_checks = checks_;
  return result;
}

template <int Dim>
DoseAccumulator start_dose(const SolutionField<Dim>& initial) {
  DoseAccumulator d;
  d.trapezoid.assign(initial.su.size(), 0.0);
  d.previous.resize(initial.su.size());
  for (std::size_t i = 0; i < initial.su.size(); ++i) {
    d.previous[i] = initial.su[i].psi0;
  }
  return d;
}

template <int Dim>
void accumulate_dose(DoseAccumulator& dose, const SolutionField<Dim>& previous,
                     const SolutionField<Dim>& current, double step) {
  const std::size_t n = current.su.size();
  if (dose.trapezoid.size() != n) {
    dose.trapezoid.assign(n, 0.0);
  }
  dose.previous.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    dose.trapezoid[i] += 0.5 * (previous.su[i].psi0 + current.su[i].psi0) * step;
    dose.previous[i] = current.su[i].psi0;
  }
}

template <int Dim>
std::vector<double> finalize_dose(const DoseAccumulator& dose, const SolutionField<Dim>& at_min,
                                  const DiscreteOperators& ops) {
  const std::size_t n = at_min.su.size();
  std::vector<double> s0(ops.materials.size());
  std::vector<double> s_min(ops.materials.size());
  for (std::size_t m = 0; m < s0.size(); ++m) {
    s0[m] = residual_stopping_power(ops.materials[m]);
    s_min[m] = stopping_power(ops.materials[m], constants::min_energy);
  }
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int m = ops.node_material[i];
    const double psi0 = at_min.su[i].psi0 / s_min[m];
    d[i] = (s0[m] * psi0 * constants::min_energy + dose.trapezoid[i]) / ops.materials[m].rho;
  }
  return d;
}

#define M1DOSE_INSTANTIATE(D)                                                                     \
  template class Stepper<D>;                                                                      \
  template DoseAccumulator start_dose<D>(const SolutionField<D>&);                                \
  template void accumulate_dose<D>(DoseAccumulator&, const SolutionField<D>&,                     \
                                   const SolutionField<D>&, double);                              \
  template std::vector<double> finalize_dose<D>(const DoseAccumulator&, const SolutionField<D>&,  \
                                                const DiscreteOperators&);

M1DOSE_INSTANTIATE(1)
M1DOSE_INSTANTIATE(2)
M1DOSE_INSTANTIATE(3)

#undef M1DOSE_INSTANTIATE

} // namespace m1dose
