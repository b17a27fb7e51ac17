#pragma once

#include <string>

#include "fedsim/metrics.hpp"
#include "fedsim/param_vector.hpp"

namespace fedsim {

// One collaborator's round product. The delta follows the convention
// delta = x_start - x_end, so the trained model is recovered as
// x_start - delta.
struct Update {
    std::string collaborator_id;
    ParamVector delta;
    long tau = 0;        // SGD steps taken this round
    long n_samples = 0;  // training pixels sampled per epoch
    double train_loss = 0.0; // mean loss over the final epoch
    MetricRecord val_metrics; // filled by the engine after local validation
};

} // namespace fedsim
