#include "fracmhd/spectral_core.hpp"
#include "fracmhd/tabular.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <string>

namespace fracmhd {

void write_measure(std::ostream& os, const SpectralMeasure& measure, int samples_per_decade) {
    if (measure.kind() == SpectralMeasure::Kind::Discrete) {
        os << "discrete\nlambda,weight\n";
        for (const auto& a : measure.atoms()) {
            os << format_double(a.lambda) << ',' << format_double(a.weight) << '\n';
        }
        return;
    }
    os << "continuous\nlambda,density\n";
    if (!measure.table().empty()) {
        for (const auto& [l, rho] : measure.table()) {
            os << format_double(l) << ',' << format_double(rho) << '\n';
        }
        return;
    }
    // Closed-form densities are sampled over twelve decades below lambda_max; the
    // reader extrapolates the lowest segment as a power law.
    const int decades = 12;
    const int count = decades * samples_per_decade;
    const double lo = measure.lambda_max() * std::pow(10.0, -decades);
    for (int i = 0; i <= count; ++i) {
        const double l = (i == count) ? measure.lambda_max()
                                      : lo * std::pow(10.0, static_cast<double>(i) / samples_per_decade);
        os << format_double(l) << ',' << format_double(measure.density(l)) << '\n';
    }
}

SpectralMeasure read_measure(std::istream& is, QuadratureOptions options) {
    std::string line;
    std::string kind;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        kind = line;
        break;
    }
    if (kind != "discrete" && kind != "continuous") {
        throw std::runtime_error("measure table line " + std::to_string(line_no) +
                                 ": expected kind 'discrete' or 'continuous'");
    }
    std::vector<std::pair<double, double>> rows;
    bool header_seen = false;
    while (std::getline(is, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        if (!header_seen) {
            header_seen = true;
            const std::string expected = kind == "discrete" ? "lambda,weight" : "lambda,density";
            if (line == expected) continue;
        }
        const auto fields = split_csv(line);
        if (fields.size() != 2) {
            throw std::runtime_error("measure table line " + std::to_string(line_no) +
                                     ": expected two columns");
        }
        rows.emplace_back(parse_double(fields[0], line_no), parse_double(fields[1], line_no));
    }
    if (kind == "discrete") {
        std::vector<SpectralAtom> atoms;
        atoms.reserve(rows.size());
        for (const auto& [l, w] : rows) atoms.push_back({l, w});
        return SpectralMeasure::discrete(std::move(atoms));
    }
    return SpectralMeasure::tabulated(std::move(rows), options);
}

}  // namespace fracmhd
