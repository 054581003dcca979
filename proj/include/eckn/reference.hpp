#pragma once

#include "eckn/deformation.hpp"
#include "eckn/network.hpp"

namespace eckn::ref {

// Serial reference implementations of the data-parallel kernels. Each is a
// straightforward loop over output elements built from the public group and
// sampling primitives; the tests require bit-identical agreement with the
// OpenMP production kernels, and the benchmark target compares their speed.

PatchField extract_patches(const FeatureMap& x, const PatchShape& patch);

FeatureMap kernel_map(const PatchField& patches, const NystromEmbedding& emb);

FeatureMap pool(const FeatureMap& x, const PoolFilter& filter);

FeatureMap apply_deformation(const FeatureMap& x, const DeformationField& tau, double alpha);

} // namespace eckn::ref
