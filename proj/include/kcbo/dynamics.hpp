#pragma once

#include <functional>
#include <optional>

#include "kcbo/consensus.hpp"
#include "kcbo/diagnostics.hpp"
#include "kcbo/objectives.hpp"
#include "kcbo/rng.hpp"
#include "kcbo/types.hpp"

namespace kcbo {

// One Euler-Maruyama step of the kinetic system. Drift and diffusion are
// evaluated at the pre-step state; one fresh J x d increment block per call.
// Throws BlowupError when the state leaves the finite range.
void em_step(ParticleEnsemble& ens, const KineticParams& params,
             const ObjectiveSpec& objective, RngStream& stream, long step_index = -1);

// Like em_step but with externally supplied consensus point and increments
// (variance dt each). Used by the coupled stepping below.
void em_step_with(ParticleEnsemble& ens, const KineticParams& params,
                  std::span<const double> consensus, std::span<const double> dW,
                  long step_index = -1);

// Overdamped baseline: X <- X - (X - M_alpha) dt + sigma S(X - M_alpha) dW.
void em_step_first_order(std::vector<double>& positions, int J, int d,
                         const KineticParams& params, const ObjectiveSpec& objective,
                         RngStream& stream, long step_index = -1);

// Where the second system of a coupled pair reads its consensus from.
enum class ConsensusModeB { Empirical, ReferenceProxy };

// Two systems driven by the same Brownian increments, plus an optional
// self-consistent reference ensemble acting as a mean-field law proxy.
struct CoupledPair {
    ParticleEnsemble a;
    ParticleEnsemble b;
    ConsensusModeB mode = ConsensusModeB::Empirical;
    std::optional<ParticleEnsemble> reference;

    void validate() const;
};

// Advances the pair one step. Draw order from the stream is fixed: first the
// shared J x d block for (a, b), then the reference block (independent noise).
void coupled_step(CoupledPair& pair, const KineticParams& params,
                  const ObjectiveSpec& objective, RngStream& stream, long step_index = -1);

struct TrajectoryOptions {
    int record_stride = 100;
    ReportSpec report;
};

using TrajectoryObserver = std::function<void(const LyapunovReport&)>;

// ceil(T/dt) steps of em_step; observer fires at step 0, every record_stride
// steps, and at the final step. Returns the final ensemble.
ParticleEnsemble run_trajectory(ParticleEnsemble ens, const KineticParams& params,
                                const ObjectiveSpec& objective, double T, RngStream& stream,
                                const TrajectoryObserver& observer,
                                const TrajectoryOptions& options = {});

}  // namespace kcbo
