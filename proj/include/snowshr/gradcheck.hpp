#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "snowshr/tensor.hpp"

namespace snowshr {

struct GradCheckReport {
    double max_abs_diff = 0.0;
    double analytic_scale = 0.0;
    double numeric_scale = 0.0;
    double relative_error = 0.0;
    bool pass = false;
    std::size_t worst_input = 0;
    std::size_t worst_element = 0;
};

// Compares tape gradients of a scalar-valued closure against central finite
// differences taken through the same closure without a tape. The step for
// element x is eps * max(1,|x|) and the reported error is
// max|g_a - g_n| / max(max|g_a|, max|g_n|).
inline GradCheckReport grad_check(const std::function<Tensor(Tape*)>& f,
                                  std::vector<Tensor> inputs, double eps = 1e-2,
                                  double tolerance = 1e-3) {
    for (Tensor& t : inputs) {
        t.set_requires_grad(true);
        t.zero_grad();
    }
    Tape tape;
    Tensor loss = f(&tape);
    backward(loss, tape);

    std::vector<std::vector<double>> analytic(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        analytic[i].assign(inputs[i].size(), 0.0);
        if (inputs[i].has_grad())
            for (std::size_t j = 0; j < inputs[i].size(); ++j)
                analytic[i][j] = inputs[i].grad()[j];
    }

    GradCheckReport rep;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        float* x = inputs[i].data();
        for (std::size_t j = 0; j < inputs[i].size(); ++j) {
            const float saved = x[j];
            const double e = eps * std::max(1.0, std::fabs(static_cast<double>(saved)));
            x[j] = static_cast<float>(saved + e);
            const double fp = f(nullptr).scalar();
            x[j] = static_cast<float>(saved - e);
            const double fm = f(nullptr).scalar();
            x[j] = saved;
            const double gn = (fp - fm) / (2.0 * e);
            const double ga = analytic[i][j];
            const double diff = std::fabs(ga - gn);
            if (diff > rep.max_abs_diff) {
                rep.max_abs_diff = diff;
                rep.worst_input = i;
                rep.worst_element = j;
            }
            rep.analytic_scale = std::max(rep.analytic_scale, std::fabs(ga));
            rep.numeric_scale = std::max(rep.numeric_scale, std::fabs(gn));
        }
    }
    const double scale = std::max(rep.analytic_scale, rep.numeric_scale);
    rep.relative_error = scale > 0.0 ? rep.max_abs_diff / scale : rep.max_abs_diff;
    rep.pass = rep.relative_error < tolerance;
    return rep;
}

}  // namespace snowshr
