#pragma once
#include <stdexcept>
#include <string>

namespace hepa {

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct missing_file_error : io_error {
    using io_error::io_error;
};
struct format_error : io_error {
    using io_error::io_error;
};
struct shape_mismatch_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct config_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
// rightmost_peak found no qualifying local maximum
struct no_peak_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// network spec rejected (e.g. input size not divisible by the pooling chain)
struct construction_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct dataset_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// non-finite training loss
struct divergence_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// input volume smaller than the sliding cube edge
struct volume_too_small_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
// phantom could not place a structure within the retry budget
struct placement_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace hepa
