#include "fann/core.hpp"

namespace fann {

double distance(const Metric& m, std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) throw std::invalid_argument("distance: dimension mismatch");
    switch (m.kind) {
        case MetricKind::euclidean: {
            double s = 0.0;
            for (size_t i = 0; i < a.size(); ++i) {
                const double d = static_cast<double>(a[i]) - b[i];
                s += d * d;
            }
            return std::sqrt(s);
        }
        case MetricKind::hamming: {
            double s = 0.0;
            for (size_t i = 0; i < a.size(); ++i) s += (a[i] != b[i]) ? 1.0 : 0.0;
            return s;
        }
        case MetricKind::inner_product: {
            double s = 0.0;
            for (size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
            return s;
        }
    }
    throw std::logic_error("distance: unknown metric kind");
}

}  // namespace fann
