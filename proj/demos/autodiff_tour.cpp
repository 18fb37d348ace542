// Tour of the autodiff engine: build a graph on a tape, read gradients back,
// verify one against finite differences, then recover a blur kernel with Adam.
#include <cmath>
#include <cstdio>

#include "snowshr/snowshr.hpp"

using namespace snowshr;

int main() {
    // forward + backward through a tiny graph
    Tensor x = Tensor::full({1, 1, 3, 3}, 0.5f);
    x.set_requires_grad(true);
    Tape tape;
    Tensor y = sum(&tape, snowshr::tanh(&tape, scale(&tape, x, 2.0f)));
    backward(y, tape);
    // d/dx sum(tanh(2x)) = 2 * (1 - tanh(2x)^2), the same for all nine cells
    std::printf("y = %.5f, dy/dx[0] = %.5f (expected %.5f)\n", y.scalar(),
                x.grad()[0], 2.0 * (1.0 - std::tanh(1.0) * std::tanh(1.0)));

    // the same machinery, checked against central finite differences
    Rng rng(11);
    Tensor img = Tensor::zeros({1, 2, 6, 6});
    Tensor ker = Tensor::zeros({3, 2, 3, 3});
    for (std::size_t i = 0; i < img.size(); ++i) img.data()[i] = rng.normalf();
    for (std::size_t i = 0; i < ker.size(); ++i) ker.data()[i] = rng.normalf(0.0f, 0.5f);
    const GradCheckReport rep = grad_check(
        [&](Tape* t) { return sum(t, snowshr::tanh(t, conv2d(t, img, ker, 1, 1))); },
        {img, ker});
    std::printf("conv2d grad check: rel err %.2e (%s)\n", rep.relative_error,
                rep.pass ? "pass" : "FAIL");

    // recover a fixed 3x3 blur kernel from input/output pairs
    const Tensor target_kernel = Tensor::full({1, 1, 3, 3}, 1.0f / 9.0f);
    ParamSet params;
    Tensor learned = params.add("kernel", Tensor::zeros({1, 1, 3, 3}));
    AdamState adam({0.05f, 0.9f, 0.999f, 1e-8f});

    std::printf("learning a 3x3 mean-blur kernel from random patches\n");
    for (int step = 1; step <= 120; ++step) {
        Tensor batch = Tensor::zeros({4, 1, 8, 8});
        for (std::size_t i = 0; i < batch.size(); ++i) batch.data()[i] = rng.normalf();
        const Tensor want = conv2d(nullptr, batch, target_kernel, 1, 1);
        Tape t;
        Tensor loss = l1_loss(&t, conv2d(&t, batch, learned, 1, 1), want);
        params.zero_grads();
        backward(loss, t);
        adam.step(params);
        if (step % 40 == 0) std::printf("  step %3d  l1 %.5f\n", step, loss.scalar());
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < learned.size(); ++i)
        worst = std::max<double>(worst, std::fabs(learned.data()[i] - 1.0 / 9.0));
    std::printf("largest kernel-weight error after training: %.4f\n", worst);
    return 0;
}
