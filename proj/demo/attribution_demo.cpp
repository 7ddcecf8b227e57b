// Plants fingerprints in three synthetic sources, estimates them back from
// residuals and attributes fresh images by maximum correlation.

#include <cstdio>
#include <vector>

#include "ganfp/ganfp.hpp"

using namespace ganfp;

int main() {
    constexpr std::size_t kEstimation = 64, kTest = 16;
    const DenoiserConfig cfg;

    std::vector<SynthSourceSpec> specs(3);
    const char* labels[] = {"alpha", "beta", "gamma"};
    for (std::size_t s = 0; s < specs.size(); ++s) {
        specs[s].label = labels[s];
        specs[s].width = specs[s].height = 128;
        specs[s].seed = 100 + s;
    }

    std::vector<Fingerprint> fps;
    std::vector<std::vector<ImagePlane>> truths;
    for (const auto& spec : specs) {
        truths.push_back(true_fingerprint(spec));
        FingerprintAccumulator acc;
        for (std::size_t i = 0; i < kEstimation; ++i) acc.add(extract_residual(generate_image(spec, truths.back(), i), cfg));
        fps.push_back(acc.mean(spec.label));
        std::printf("%-6s corr(estimate, planted) = %.3f\n", spec.label.c_str(), corr(fps.back().planes, truths.back()));
    }

    std::size_t correct = 0;
    for (std::size_t s = 0; s < specs.size(); ++s)
        for (std::size_t i = kEstimation; i < kEstimation + kTest; ++i) {
            const auto a = attribute(extract_residual(generate_image(specs[s], truths[s], i), cfg), fps);
            correct += a.label == specs[s].label;
        }
    std::printf("attributed %zu of %zu test images correctly\n", correct, specs.size() * kTest);
    return 0;
}
