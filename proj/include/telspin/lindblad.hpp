#pragma once

#include <complex>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "telspin/curve.hpp"
#include "telspin/params.hpp"
#include "telspin/sequence.hpp"

// Fully quantum engine for the coupled register: the fluctuator is the
// electron spin (S = 1/2 for a 2LF, S = 1 for a 3LF), the qubit is the
// I = 1 nuclear spin.  Electron T1 hopping enters as Lindblad jump
// operators; the nuclear spin needs no jump operators of its own, its
// dephasing is mediated entirely by the hyperfine term of the Hamiltonian.
//
// Basis ordering: electron levels in descending m_S tensor nuclear levels
// in descending m_I (+1, 0, -1).  All frequencies are angular, rad/us.

namespace telspin {

struct RegisterHamiltonian {
  int electron_dim = 3;  // 2 for S=1/2, 3 for S=1
  double zfs_rad_us = 0.0;      // D, used by the S=1 register only
  double omega_e_rad_us = 0.0;  // electron Larmor
  double omega_n_rad_us = 0.0;  // nuclear Larmor
  // Hyperfine tensor, rows S_{x,y,z}, columns I_{x,y,z}.  The secular
  // default is diag(0, 0, 2 pi A); only A_zz has a semiclassical analog.
  Eigen::Matrix3d hyperfine_rad_us = Eigen::Matrix3d::Zero();

  int dim() const { return electron_dim * 3; }
};

// Secular register at the reference field (424 G): omega_e = 2 pi * 1187.2,
// omega_n = 2 pi * 0.1305, D = 2 pi * 2870 rad/us, A_zz = 2 pi * A.  With a
// secular tensor these frame frequencies commute with every population and
// cancel inside the tracked nuclear coherence; only A_zz shapes the decay.
RegisterHamiltonian secular_register(const FluctuatorParams& p);

// Spin operators on a 2- or 3-dimensional space, descending m basis.
Eigen::MatrixXcd spin_x(int dim);
Eigen::MatrixXcd spin_y(int dim);
Eigen::MatrixXcd spin_z(int dim);

// Dense register Hamiltonian.  Hermitian by construction for any real
// hyperfine tensor; [H, S_z] = 0 whenever only the z-row is populated.
Eigen::MatrixXcd hamiltonian(const RegisterHamiltonian& h);

struct Liouvillian {
  RegisterHamiltonian h;
  double t1_us = 0.0;  // infinity means purely Hamiltonian flow
  int dim = 0;         // register dimension d; map is d^2 x d^2
  int jump_count = 0;
  Eigen::MatrixXcd map;  // column-stacking vec convention
};

// -i[H, .] plus one jump operator Gamma |m_s><m_s'| (x) I_n per ordered
// electron pair, Gamma^2 = 1/(2 T1) for S=1/2 and 1/(3 T1) for S=1, i.e.
// the pairwise semiclassical rate gamma.  t1 = infinity drops the
// dissipators.  Throws on a non-Hermitian Hamiltonian or t1 <= 0.
Liouvillian build_liouvillian(const RegisterHamiltonian& h, double t1_us);

// rho(t) = unvec(e^{L t} vec(rho0)).  Validates rho0 (Hermitian, unit
// trace, PSD within 1e-9), then restores exact Hermiticity and trace on
// the output; the pre-restoration deviation is reported through
// *deviation if given.
Eigen::MatrixXcd propagate(const Liouvillian& l, const Eigen::MatrixXcd& rho0,
                           double t_us, double* deviation = nullptr);

// Off-diagonal element of the electron-traced density matrix between the
// m_I levels (a, b) = mI_pair, read as <b| Tr_e rho |a>, with the rotating
// frame at omega_n removed when the sampling time is supplied.  A stuck
// electron level m then contributes exp(+i (a-b) A_zz m t), the quantum
// analog of the semiclassical exp(+i l v t).
std::complex<double> nuclear_coherence(const Eigen::MatrixXcd& rho,
                                       std::pair<int, int> mI_pair,
                                       double omega_n_rad_us = 0.0,
                                       double t_us = 0.0);

// Product state: electron prepared per `init` (equilibrium mixes levels
// uniformly), nucleus in the balanced superposition of the mI_pair, so the
// raw pair coherence starts at 1/2.
Eigen::MatrixXcd initial_register_state(const RegisterHamiltonian& h,
                                        Init init,
                                        std::pair<int, int> mI_pair = {+1, 0});

// Ideal instantaneous pi rotation for one schedule target: qubit acts on
// the nuclear mI_pair, dq swaps the outer electron levels, sq+/sq- swap an
// outer electron level with m_S = 0 (S=1 registers only; throws otherwise).
// The pulse phase enters the unitary; electron-pulse phases never reach
// the traced nuclear coherence.
Eigen::MatrixXcd pulse_unitary(const RegisterHamiltonian& h, Drive target,
                               double phase_rad,
                               std::pair<int, int> mI_pair = {+1, 0});

// Piecewise propagation through the schedule: exact segment exponentials
// (cached per distinct duration), sandwiched pulse unitaries, nuclear
// coherence sampled at times_us.  Values are frame-removed and normalized
// by the initial pair coherence, so they compare directly with the
// semiclassical engines.  Uniform single-target pi trains advance between
// samples by binary powers of the cycle superoperator.
DecayCurve lindblad_dd(const Liouvillian& l, const Eigen::MatrixXcd& rho0,
                       const PulseSchedule& schedule,
                       const std::vector<double>& times_us,
                       std::pair<int, int> mI_pair = {+1, 0});

// Structured text for density matrices: header plus row-major re/im pairs,
// 17 significant digits, bit-exact round trip.
std::string density_to_text(const Eigen::MatrixXcd& rho);
Eigen::MatrixXcd density_from_text(const std::string& text);

}  // namespace telspin
