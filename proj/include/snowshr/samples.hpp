#pragma once

#include <string>

#include "snowshr/classes.hpp"
#include "snowshr/errors.hpp"
#include "snowshr/image.hpp"

namespace snowshr {

// One snow/bare image pair for translator training.
struct PairedSample {
    InputImage snow_image;
    InputImage bare_image;
    std::string id;

    void validate() const {
        snow_image.validate();
        bare_image.validate();
        if (snow_image.height != bare_image.height || snow_image.width != bare_image.width)
            throw DimensionError("PairedSample '" + id + "': image dims differ");
    }
};

// One image with its class mask for segmenter training.
struct AnnotatedSample {
    InputImage image;
    MaskImage mask;
    std::string id;

    void validate() const {
        image.validate();
        mask.validate(kNumClasses);
        if (image.height != mask.height || image.width != mask.width)
            throw DimensionError("AnnotatedSample '" + id + "': image and mask dims differ");
    }
};

}  // namespace snowshr
