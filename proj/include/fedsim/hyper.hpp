#pragma once

#include <memory>
#include <string>

namespace fedsim {

// Per-round training hyperparameters handed to every selected collaborator.
struct HyperDecision {
    double lr = 0.0;
    int epochs_per_round = 1;
};

// Reduce-on-plateau bookkeeping for the tracked validation metric.
struct PlateauState {
    double best_metric = -1e300;
    int rounds_since_improvement = 0;
    double current_lr = 2e-4;
    int patience = 15;
    double decay_factor = 0.5;
};

// Fixed defaults: lr 0.00005, one epoch per round.
HyperDecision constant_policy();

// Strict improvement resets the counter; once the counter reaches `patience`
// the learning rate is scaled by decay_factor and the counter resets.
// Returns the learning rate to use next.
double plateau_step(PlateauState& state, double current_mean_dice);

// ceil(sqrt(Ft / F0) * E0), clamped to [1, E0]. F0 must be positive.
int adaptive_epoch(double f0, double ft, int e0);

// LR from the plateau rule, epoch count from the loss-ratio rule, composed
// independently.
HyperDecision combined_policy(PlateauState& plateau, double f0, double ft, int e0,
                              double current_mean_dice);

// Engine-facing policy object. decide() is called before a round starts,
// observe() after its aggregate metrics are known.
class HyperPolicy {
public:
    virtual ~HyperPolicy() = default;
    virtual HyperDecision decide(int round) = 0;
    virtual void observe(int round, double mean_dice, double agg_loss) = 0;
};

struct HyperParams {
    double lr0 = 0.0;          // 0 means policy default
    int patience = 15;
    double decay_factor = 0.5;
    int e0 = 8;
};

// name is one of: constant, lr_plateau, adaptive_epoch, adaptive_epoch+lr_plateau.
std::unique_ptr<HyperPolicy> make_hyper_policy(const std::string& name,
                                               const HyperParams& params);

} // namespace fedsim
