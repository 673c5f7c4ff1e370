#pragma once

#include <json.hpp>

#include "parab/central_config.hpp"
#include "parab/orbit.hpp"

namespace parab {

using Json = nlohmann::json;

Json to_json(const Vector& v);
Vector vector_from_json(const Json& j);

/// Certificate {xi_plus, u_value, spectrum, nu1, bs_margin, holds, zeta}.
Json certificate_json(const CentralConfiguration& cc, const BsCertificate& bs);

Json diagnostics_json(const DiagnosticsReport& d);
Json solve_json(const SolveResult& sr, const ScalingParams& params);
Json lemma_bounds_json(const LemmaBounds& lb);
Json verification_json(const VerificationReport& rep);

void write_json(const Json& j, const std::string& path);

}  // namespace parab
