#pragma once

#include "thinlim/barriers.hpp"
#include "thinlim/ellipticity.hpp"
#include "thinlim/model.hpp"
#include "thinlim/reduction.hpp"
#include "thinlim/solver.hpp"
#include "thinlim/transform.hpp"

#include <string>
#include <vector>

namespace thinlim {

/// Shortest round-trip text for a double (%.17g).
std::string fmt(double v);
std::string fmtVec(const Vec& v);

/// CSV table with a header row.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
    void add(std::vector<std::string> row);
    std::string str() const;
    std::size_t rows() const { return rows_.size(); }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// Create parent directories as needed and write text.
void writeFile(const std::string& path, const std::string& text);

std::string formatDiagnostics(const DiagnosticsReport& r);
std::string formatCertificate(const std::string& title, const CertificateReport& r);
std::string formatEquivalence(const EquivalenceReport& r);
std::string formatRepresentation(const RepresentationReport& r, const SubadditivityReport& s, const BoundsReport& b);
std::string formatHatBoundary(const HatBoundaryReport& r, const DistortionMap& map);
std::string formatParams(const BarrierParams& p);
std::string formatMargins(const BarrierMargins& m);
std::string formatObstruction(const ObstructionReport& r);
std::string formatPerturbation(const PerturbationReport& r);

/// x1..xN[, y], u, lambda, mu per node.
std::string fieldCsv(const GridField& u);
/// x1..xN, y, upper, lower at every node of a strip lattice.
std::string barrierCsv(const BarrierPair& pair, const Box& omega, double yLower, double yUpper, int nx, int ny);

}  // namespace thinlim
