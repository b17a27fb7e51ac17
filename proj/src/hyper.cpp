#include "fedsim/hyper.hpp"

#include <cmath>
#include <optional>

#include "fedsim/errors.hpp"

namespace fedsim {

namespace {

constexpr double kConstantLr = 5e-5;
constexpr double kPlateauLr0 = 2e-4;

} // namespace

HyperDecision constant_policy() { return HyperDecision{kConstantLr, 1}; }

double plateau_step(PlateauState& state, double current_mean_dice) {
    if (state.patience < 1) throw UsageError("plateau_step: patience must be >= 1");
    if (state.decay_factor <= 0.0 || state.decay_factor >= 1.0)
        throw UsageError("plateau_step: decay_factor must be in (0, 1)");

    if (current_mean_dice > state.best_metric) {
        state.best_metric = current_mean_dice;
        state.rounds_since_improvement = 0;
    } else {
        ++state.rounds_since_improvement;
        if (state.rounds_since_improvement >= state.patience) {
            state.current_lr *= state.decay_factor;
            state.rounds_since_improvement = 0;
        }
    }
    return state.current_lr;
}

int adaptive_epoch(double f0, double ft, int e0) {
    if (f0 <= 0.0) throw StateError("adaptive_epoch: round-0 loss must be positive");
    if (ft < 0.0) throw UsageError("adaptive_epoch: negative loss");
    if (e0 < 1) throw UsageError("adaptive_epoch: E0 must be >= 1");
    const int raw = static_cast<int>(std::ceil(std::sqrt(ft / f0) * static_cast<double>(e0)));
    return std::min(std::max(raw, 1), e0);
}

HyperDecision combined_policy(PlateauState& plateau, double f0, double ft, int e0,
                              double current_mean_dice) {
    HyperDecision d;
    d.lr = plateau_step(plateau, current_mean_dice);
    d.epochs_per_round = adaptive_epoch(f0, ft, e0);
    return d;
}

namespace {

class ConstantHyper final : public HyperPolicy {
public:
    explicit ConstantHyper(double lr) : lr_(lr) {}
    HyperDecision decide(int) override { return HyperDecision{lr_, 1}; }
    void observe(int, double, double) override {}

private:
    double lr_;
};

class PlateauHyper final : public HyperPolicy {
public:
    PlateauHyper(double lr0, int patience, double factor) {
        state_.current_lr = lr0;
        state_.patience = patience;
        state_.decay_factor = factor;
    }
    HyperDecision decide(int) override { return HyperDecision{state_.current_lr, 1}; }
    void observe(int, double mean_dice, double) override { plateau_step(state_, mean_dice); }

private:
    PlateauState state_;
};

class AdaptiveEpochHyper final : public HyperPolicy {
public:
    AdaptiveEpochHyper(double lr, int e0) : lr_(lr), e0_(e0) {}
    HyperDecision decide(int) override {
        if (!f0_) return HyperDecision{lr_, e0_};
        return HyperDecision{lr_, adaptive_epoch(*f0_, ft_, e0_)};
    }
    void observe(int, double, double agg_loss) override {
        if (!f0_) f0_ = agg_loss; // first observed aggregate loss anchors the decay ratio
        ft_ = agg_loss;
    }

private:
    double lr_;
    int e0_;
    std::optional<double> f0_;
    double ft_ = 0.0;
};

class CombinedHyper final : public HyperPolicy {
public:
    CombinedHyper(double lr0, int patience, double factor, int e0)
        : plateau_(lr0, patience, factor), adaptive_(lr0, e0) {}
    HyperDecision decide(int round) override {
        HyperDecision d = adaptive_.decide(round);
        d.lr = plateau_.decide(round).lr;
        return d;
    }
    void observe(int round, double mean_dice, double agg_loss) override {
        plateau_.observe(round, mean_dice, agg_loss);
        adaptive_.observe(round, mean_dice, agg_loss);
    }

private:
    PlateauHyper plateau_;
    AdaptiveEpochHyper adaptive_;
};

} // namespace

std::unique_ptr<HyperPolicy> make_hyper_policy(const std::string& name,
                                               const HyperParams& params) {
    const double lr0 = params.lr0;
    if (name == "constant")
        return std::make_unique<ConstantHyper>(lr0 > 0 ? lr0 : kConstantLr);
    if (name == "lr_plateau")
        return std::make_unique<PlateauHyper>(lr0 > 0 ? lr0 : kPlateauLr0, params.patience,
                                              params.decay_factor);
    if (name == "adaptive_epoch")
        return std::make_unique<AdaptiveEpochHyper>(lr0 > 0 ? lr0 : kConstantLr, params.e0);
    if (name == "adaptive_epoch+lr_plateau")
        return std::make_unique<CombinedHyper>(lr0 > 0 ? lr0 : kPlateauLr0, params.patience,
                                               params.decay_factor, params.e0);
    throw ConfigError("unknown hyper policy '" + name + "'");
}

} // namespace fedsim
