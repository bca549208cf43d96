#pragma once

#include "thinlim/config.hpp"
#include "thinlim/model.hpp"

#include <random>
#include <string>

namespace testutil {

using thinlim::Mat;
using thinlim::Vec;

inline thinlim::ProblemConfig loadNamed(const std::string& name) {
    return thinlim::loadConfig(std::string(THINLIM_CONFIG_DIR) + "/" + name + ".ini");
}

inline thinlim::ThinProblem fromIni(const std::string& text) { return thinlim::parseConfig(text).problem; }

/// One-dimensional strip over (0, 1) with g = +-1, a single control and the
/// given extra lines in the coefficient and boundary sections.
inline std::string stripIni(const std::string& coeffs, const std::string& boundary = "s = x1",
                            const std::string& geometryExtra = "g_minus = -1\ng_plus = 1") {
    return "[problem]\ndimension = 1\nepsilon0 = 0.5\n"
           "[geometry]\nlower = 0\nupper = 1\n" + geometryExtra + "\n"
           "[coefficients.0.0]\n" + coeffs + "\n"
           "[boundary]\n" + boundary + "\n";
}

struct Rng {
    std::mt19937_64 gen;
    explicit Rng(unsigned long seed) : gen(seed) {}
    double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(gen); }
    int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(gen); }
    Vec vec(int n, double a = -1, double b = 1) {
        Vec v(n);
        for (int i = 0; i < n; ++i) v[i] = uniform(a, b);
        return v;
    }
    Mat mat(int r, int c, double a = -1, double b = 1) {
        Mat m(r, c);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) m(i, j) = uniform(a, b);
        return m;
    }
    Mat sym(int n) {
        Mat m = mat(n, n);
        return (m + m.transpose()) / 2;
    }
};

}  // namespace testutil
