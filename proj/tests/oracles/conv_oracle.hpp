#pragma once

// Independent nested-loop reference for the classifier forward pass. Written
// against the architecture contract only (conv3x3 / stride 1 / zero pad /
// ReLU -> global average pool -> dense -> logistic); shares no code with the
// implementation it checks.

#include <cmath>
#include <vector>

#include "nightwatch/classifier.hpp"
#include "nightwatch/raster.hpp"

namespace oracle {

inline double classify_reference(const nightwatch::ClassifierModel& model,
                                 const nightwatch::Crop& crop) {
  const int s = model.input_size;

  // image[c][r][col]
  std::vector<std::vector<std::vector<double>>> image(
      crop.planes.size(),
      std::vector<std::vector<double>>(static_cast<size_t>(s), std::vector<double>(static_cast<size_t>(s))));
  for (size_t c = 0; c < crop.planes.size(); ++c)
    for (int r = 0; r < s; ++r)
      for (int col = 0; col < s; ++col)
        image[c][static_cast<size_t>(r)][static_cast<size_t>(col)] = crop.at(static_cast<int>(c), r, col);

  for (const auto& layer : model.conv_layers) {
    std::vector<std::vector<std::vector<double>>> out(
        static_cast<size_t>(layer.out_channels),
        std::vector<std::vector<double>>(static_cast<size_t>(s), std::vector<double>(static_cast<size_t>(s), 0.0)));
    for (int oc = 0; oc < layer.out_channels; ++oc) {
      for (int r = 0; r < s; ++r) {
        for (int col = 0; col < s; ++col) {
          double acc = layer.bias[static_cast<size_t>(oc)];
          for (int ic = 0; ic < layer.in_channels; ++ic) {
            for (int kr = 0; kr < 3; ++kr) {
              for (int kc = 0; kc < 3; ++kc) {
                const int rr = r + kr - 1;
                const int cc = col + kc - 1;
                double v = 0.0;  // zero padding
                if (rr >= 0 && rr < s && cc >= 0 && cc < s)
                  v = image[static_cast<size_t>(ic)][static_cast<size_t>(rr)][static_cast<size_t>(cc)];
                const size_t widx =
                    ((static_cast<size_t>(oc) * layer.in_channels + ic) * 3 + kr) * 3 + kc;
                acc += static_cast<double>(layer.weights[widx]) * v;
              }
            }
          }
          out[static_cast<size_t>(oc)][static_cast<size_t>(r)][static_cast<size_t>(col)] =
              std::max(0.0, acc);
        }
      }
    }
    image = std::move(out);
  }

  double logit = model.dense_bias;
  for (size_t c = 0; c < image.size(); ++c) {
    double total = 0.0;
    for (const auto& row : image[c])
      for (double v : row) total += v;
    logit += static_cast<double>(model.dense_weights[c]) * (total / (static_cast<double>(s) * s));
  }
  return 1.0 / (1.0 + std::exp(-logit));
}

}  // namespace oracle
