#pragma once

#include "m1dose/grid.hpp"
#include "m1dose/limiter.hpp"
#include "m1dose/moments.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <type_traits>
#include <vector>

namespace m1dose {

/// Moment floor used for the initial condition and far from the beam spot.
inline constexpr double fluence_floor = 1e-15;

/// Gaussian proton beam entering through the lower face of `axis`.
struct BeamSpec {
  double energy = 0.0;        ///< E0 [MeV]
  double protons = 0.0;       ///< psi_0
  double energy_spread = 0.0; ///< sigma_E [MeV]
  double spot_sigma = 0.3;    ///< sigma_k [cm] on every transverse axis
  int axis = 0;
  Point3 isocenter{};         ///< the component along `axis` is ignored
  double collimation = 0.9999;

  /// Defaults: sigma_E = 0.01 E0, sigma_k = 0.3 cm, f = 0.9999.
  static BeamSpec make(double energy, double protons, int axis = 0, Point3 isocenter = {});

  /// Energy part psi_0 N(E; E0, sigma_E^2).
  double energy_profile(double e) const;
  /// Product of transverse Gaussians at x.
  double spatial_profile(const Point3& x, int dim) const;
  /// Zeroth moment psi_hat0(x, E).
  double fluence(const Point3& x, double e, int dim) const;
};

enum class Scheme { low_order, mcl };

struct StepperOptions {
  Scheme scheme = Scheme::mcl;
  bool scattering = true;
  double cfl = 0.5;
  /// Forces every raw antidiffusive flux to zero (consistency checks).
  bool zero_antidiffusion = false;
};

/// Conserved products (S psi0, S psi1) at every node at one energy level.
template <int Dim>
struct SolutionField {
  std::vector<Moment<Dim>> su;
  double energy = 0.0;
};

/// Running trapezoid sums of integral (S psi0) dE per node.
struct DoseAccumulator {
  std::vector<double> trapezoid;
  std::vector<double> previous;
};

struct LevelInfo {
  std::size_t level = 0;
  double energy = 0.0; ///< energy reached by this level
  double step = 0.0;
  double min_psi0 = 0.0;
  double max_psi0 = 0.0;
};

template <int Dim>
struct MarchResult {
  SolutionField<Dim> field;
  std::size_t levels = 0;
  std::size_t realizability_checks = 0;
  std::size_t violations = 0;
};

/// Boundary contribution w (f(u) n - F_GLF(u, u_hat; n)).
template <int Dim>
Moment<Dim> boundary_term(const Moment<Dim>& u, const Moment<Dim>& u_hat,
                          const std::type_identity_t<Vec<Dim>>& n,
                          double w) {
  return w * (flux(u).dot(n) - glf_interface_flux(u, u_hat, n));
}

/// Boundary bar state (u + u_hat)/2 - (f(u_hat) - f(u)) n / (2 lambda_max).
template <int Dim>
Moment<Dim> boundary_bar_state(const Moment<Dim>& u, const Moment<Dim>& u_hat,
                               const FluxTensor<Dim>& f_u, const FluxTensor<Dim>& f_hat,
                               const std::type_identity_t<Vec<Dim>>& n) {
  return 0.5 * (u + u_hat) - (0.5 / constants::max_wave_speed) * (f_hat - f_u).dot(n);
}

/// Backward-in-energy integrator: Strang splitting of scattering and
/// transport, Heun's method with low-order or MCL transport stages.
template <int Dim>
class Stepper {
public:
  using Field = SolutionField<Dim>;
  using Progress = std::function<void(const LevelInfo&, const Field&)>;

  Stepper(const StructuredGrid& grid, const DiscreteOperators& ops, std::vector<BeamSpec> beams,
          StepperOptions options);

  const StepperOptions& options() const { return options_; }
  const DiscreteOperators& operators() const { return ops_; }

  /// Highest beam energy times 1.1.
  double max_energy() const;

  /// psi0 = 1e-15, psi1 = 0 scaled by S(E_max).
  Field initial_field(double e_max) const;

  /// Nodal stopping powers at `energy` (clamped to E_min).
  std::vector<double> stopping_powers(double energy) const;

  /// Realizable boundary state of every inflow facet at `energy`.
  std::vector<Moment<Dim>> inflow_states(double energy) const;

  /// CFL-limited step, clipped to land on E_min.
  double compute_energy_step(const Field& field) const;

  /// Exact integration of the scattering forcing from e_from down to e_to.
  void scattering_half_step(Field& field, double e_from, double e_to);

  /// Low-order right-hand side divided by m_i, signed so that
  /// (Su)(E - dE) = (Su)(E) + dE * rate.
  std::vector<Moment<Dim>> low_order_rate(const Field& field, bool include_scattering);

  /// One forward-Euler stage of the transport subproblem.
  Field transport_stage(const Field& field, double step);

  /// Heun: u* = stage(u); result = (u + stage(u*)) / 2.
  Field heun_transport_step(const Field& field, double step);

  /// One full Strang step from field.energy to field.energy - step.
  Field strang_step(const Field& field, double step);

  /// March from the initial field down to E_min, accumulating dose.
  MarchResult<Dim> strang_march(Field field, DoseAccumulator& dose,
                                const Progress& progress = {});

  std::size_t realizability_checks() const { return checks_; }

private:
  struct InflowFacet {
    std::uint32_t node = 0;
    double weight = 0.0;
    Vec<Dim> normal{};
    Vec<Dim> direction{};
    std::vector<std::pair<std::size_t, double>> beams; // beam index, spatial profile
  };

  void to_moments(const Field& field, std::vector<Moment<Dim>>& u) const;
  void compute_bar_states();
  void compute_boundary_bars(double energy);
  void transport_rates(); // fills rate_ from bars
  void check_realizable(const Field& field, const char* where);

  StructuredGrid grid_;
  const DiscreteOperators& ops_;
  std::vector<BeamSpec> beams_;
  StepperOptions options_;

  std::vector<double> cfl_factor_; // 2 (sum d_ij + d_i^Gamma) / m_i
  std::vector<InflowFacet> inflow_;
  std::vector<std::uint32_t> inflow_offsets_; // per node, into inflow_

  // Stage workspace.
  std::vector<Moment<Dim>> u_;
  std::vector<FluxTensor<Dim>> flux_;
  EdgeBarStates<Dim> bars_;
  std::vector<Moment<Dim>> boundary_bars_;
  std::vector<Moment<Dim>> rate_;
  std::vector<double> stopping_;
  std::vector<Moment<Dim>> surrogate_;
  std::vector<AntidiffusiveFlux<Dim>> limited_;
  std::vector<Moment<Dim>> correction_;
  LocalBounds<Dim> bounds_;
  std::size_t checks_ = 0;
};

/// Adds ((S psi0)^n + (S psi0)^(n+1)) / 2 * step per node.
template <int Dim>
void accumulate_dose(DoseAccumulator& dose, const SolutionField<Dim>& previous,
                     const SolutionField<Dim>& current, double step);

template <int Dim>
DoseAccumulator start_dose(const SolutionField<Dim>& initial);

/// D_i = (S0 psi0_i E_min + trapezoid sum) / rho_i, in MeV/g.
template <int Dim>
std::vector<double> finalize_dose(const DoseAccumulator& dose, const SolutionField<Dim>& at_min,
                                  const DiscreteOperators& ops);

} // namespace m1dose
