#include <benchmark/benchmark.h>

#include <cstddef>
#include <vector>

#include "corrnoise/nn.hpp"
#include "corrnoise/noise.hpp"
#include "corrnoise/random.hpp"
#include "corrnoise/tensor.hpp"

using namespace corrnoise;

static void BM_ConvForward(benchmark::State& state) {
    const auto ch = static_cast<std::size_t>(state.range(0));
    Tensor<float> input({2, ch, 32, 32});
    Tensor<float> kernels({ch, ch, 3, 3});
    Tensor<float> bias({ch});
    RandomStream stream(1);
    for (float& v : input.data()) v = static_cast<float>(stream.normal());
    for (float& v : kernels.data()) v = static_cast<float>(stream.normal() * 0.05);
    for (auto _ : state)
        benchmark::DoNotOptimize(nn::conv2d_forward(input, kernels, bias, 1, nn::Padding::Same));
    state.SetLabel(std::to_string(ch) + " channels, batch 2");
}
BENCHMARK(BM_ConvForward)->Arg(32)->Arg(96)->Unit(benchmark::kMillisecond);

static void BM_ConvBackward(benchmark::State& state) {
    const auto ch = static_cast<std::size_t>(state.range(0));
    Tensor<float> input({2, ch, 32, 32});
    Tensor<float> kernels({ch, ch, 3, 3});
    Tensor<float> bias({ch});
    RandomStream stream(1);
    for (float& v : input.data()) v = static_cast<float>(stream.normal());
    for (float& v : kernels.data()) v = static_cast<float>(stream.normal() * 0.05);
    const Tensor<float> out = nn::conv2d_forward(input, kernels, bias, 1, nn::Padding::Same);
    Tensor<float> g_out = out;
    Tensor<float> g_input(input.shape()), g_kernels(kernels.shape()), g_bias(bias.shape());
    for (auto _ : state) {
        nn::conv2d_backward(g_out, input, kernels, 1, nn::Padding::Same, g_input, g_kernels,
                            g_bias);
        benchmark::DoNotOptimize(g_input.data().data());
    }
    state.SetLabel(std::to_string(ch) + " channels, batch 2");
}
BENCHMARK(BM_ConvBackward)->Arg(32)->Arg(96)->Unit(benchmark::kMillisecond);

// Full network step at the narrow first-layer width used by the experiments.
static void BM_TrainStep(benchmark::State& state) {
    nn::NetworkSpec spec = nn::build_allconvnet(10, {});
    nn::Network<float> net(spec);
    RandomStream init(3);
    net.init_params(init);

    const std::size_t batch = 2;
    Tensor<float> input({batch, 3, 32, 32});
    RandomStream data(4);
    for (float& v : input.data()) v = static_cast<float>(data.normal());
    const std::vector<int> labels = {1, 7};

    auto grads = net.make_gradients();
    RandomStream stream(5);
    for (auto _ : state) {
        nn::Tape<float> tape;
        const Tensor<float> logits = net.forward(input, true, &stream, &tape);
        benchmark::DoNotOptimize(net.loss(logits, labels, &tape));
        net.backward(tape, grads);
    }
    state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

static void BM_EvalForward(benchmark::State& state) {
    nn::NetworkSpec spec = nn::build_allconvnet(10, {});
    nn::Network<float> net(spec);
    RandomStream init(3);
    net.init_params(init);

    const std::size_t batch = 2;
    Tensor<float> input({batch, 3, 32, 32});
    RandomStream data(4);
    for (float& v : input.data()) v = static_cast<float>(data.normal());

    for (auto _ : state)
        benchmark::DoNotOptimize(net.forward(input, false, nullptr, nullptr));
    state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_EvalForward)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
