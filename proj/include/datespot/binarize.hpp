#ifndef DATESPOT_BINARIZE_HPP
#define DATESPOT_BINARIZE_HPP

// Bayesian text/non-text pixel classification over the three smoothed
// domain images, followed by posterior thresholding.

#include <stdexcept>

#include "datespot/enhance.hpp"
#include "datespot/image.hpp"

namespace datespot {

struct PosteriorMap {
    Plane plane;  // P(text | pixel) in [0,1]
};

struct BinaryImage {
    Plane plane;  // {0,1}, 1 = text
};

/// Posterior text probability per pixel. Likelihoods are the mean of the
/// three smoothed planes (text) and of their complements (non-text); priors
/// come from counting pixels whose text likelihood dominates. A 0/0
/// posterior is defined as 0.
inline PosteriorMap text_posterior(const DomainSmooth& smooths) {
    detail::check_same_size(smooths.rgb, smooths.wavelet);
    detail::check_same_size(smooths.rgb, smooths.gradient);
    const int w = smooths.rgb.width, h = smooths.rgb.height;

    Plane like_text(w, h), like_non(w, h);
    size_t text_votes = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            float a = smooths.rgb.at(x, y);
            float b = smooths.wavelet.at(x, y);
            float c = smooths.gradient.at(x, y);
            float pt = (a + b + c) / 3.0f;
            float pn = ((1 - a) + (1 - b) + (1 - c)) / 3.0f;
            like_text.at(x, y) = pt;
            like_non.at(x, y) = pn;
            if (pt > pn) ++text_votes;
        }
    double prior_text = double(text_votes) / (double(w) * h);
    double prior_non = 1.0 - prior_text;

    PosteriorMap out;
    out.plane = Plane(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double num = double(like_text.at(x, y)) * prior_text;
            double den = num + double(like_non.at(x, y)) * prior_non;
            out.plane.at(x, y) = den > 0.0 ? float(num / den) : 0.0f;
        }
    return out;
}

/// B(x,y) = 1 iff posterior >= gamma. Default gamma is 0.05.
inline BinaryImage threshold_binary(const PosteriorMap& post, double gamma = 0.05) {
    if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("gamma must be in [0,1]");
    BinaryImage out;
    out.plane = Plane(post.plane.width, post.plane.height);
    for (size_t i = 0; i < post.plane.data.size(); ++i)
        out.plane.data[i] = post.plane.data[i] >= float(gamma) ? 1.0f : 0.0f;
    return out;
}

}  // namespace datespot

#endif
