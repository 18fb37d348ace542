#pragma once

#include <stdexcept>
#include <string>

namespace snowshr {

// Base for everything thrown by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Tensor/layer shape mismatch; message names the offending axis.
struct DimensionError : Error {
    using Error::Error;
};

// Invalid configuration value (indivisible dims, bad rates, ...).
struct ConfigError : Error {
    using Error::Error;
};

// Bad runtime input to an operation (wrong image dims, empty dataset).
struct InputError : Error {
    using Error::Error;
};

// Class label out of range; message carries the pixel coordinate.
struct LabelError : Error {
    using Error::Error;
};

// File could not be read/written; message carries the path.
struct IoError : Error {
    using Error::Error;
};

// Checkpoint magic/version/structure mismatch.
struct FormatError : Error {
    using Error::Error;
};

// Malformed CSV/config text; message carries the line number.
struct ParseError : Error {
    using Error::Error;
};

// Synthetic scene is infeasible for the requested parameters.
struct GenerationError : Error {
    using Error::Error;
};

// pix(RsL) == 0: the pipeline found no road surface in the image.
// A missing road is a pipeline failure, not a safe road, so this is
// an error rather than SHR = 0.
struct NoRoadDetectedError : Error {
    explicit NoRoadDetectedError(const std::string& image_id)
        : Error("no road surface detected in image '" + image_id + "'"),
          image_id_(image_id) {}
    const std::string& image_id() const { return image_id_; }

  private:
    std::string image_id_;
};

// Metric requested on an empty confusion matrix.
struct UndefinedMetricError : Error {
    using Error::Error;
};

// API contract violation (e.g. backward on a non-scalar loss).
struct ContractError : Error {
    using Error::Error;
};

}  // namespace snowshr
