#ifndef FSAN_EXPERIMENT_IO_HPP
#define FSAN_EXPERIMENT_IO_HPP

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include <fsan/admm.hpp>
#include <fsan/experiment/scene.hpp>

namespace fsan::experiment
{

/// Schema tags carried in the "schema" field of every JSON document.
inline constexpr const char* instance_schema = "fsan.instance/1";
inline constexpr const char* output_schema = "fsan.output/1";
inline constexpr const char* fixture_schema = "fsan.fixture/1";
inline constexpr const char* scene_schema = "fsan.scene/1";

/// Complex vectors serialize as {"re": [...], "im": [...]}.
nlohmann::json vector_to_json(const CVector<double>& v);
CVector<double> vector_from_json(const nlohmann::json& j);

/// Matrices serialize as {"rows", "cols", "re", "im"} in row-major order.
nlohmann::json matrix_to_json(const CMatrix<double>& m);
CMatrix<double> matrix_from_json(const nlohmann::json& j);

/// {"shape": [2N_i - 1 ...], "re", "im"}, offset p stored at p + N - 1 with
/// the last dimension fastest.
nlohmann::json generator_to_json(const GeneratorTensor<double>& b);
GeneratorTensor<double> generator_from_json(const nlohmann::json& j);

nlohmann::json bands_to_json(const std::vector<FrequencyBand>& bands);
std::vector<FrequencyBand> bands_from_json(const nlohmann::json& j);

///
/// A solver input shared with external tools: the measurement, bands,
/// mode, optional lambda and optional ground truth.
///
struct Instance
{
    Measurement<double> meas;
    std::vector<FrequencyBand> bands;
    SolverMode mode = SolverMode::constrained;
    std::optional<double> lambda;
    std::optional<SpectralModel<double>> truth_model;
    CVector<double> truth_x; ///< empty when unknown
};

nlohmann::json instance_to_json(const Instance& inst);
/// Throws std::invalid_argument naming the offending field on schema errors.
Instance instance_from_json(const nlohmann::json& j);

Instance make_instance(const Scene& scene, const std::vector<FrequencyBand>& bands,
                       SolverMode mode, std::optional<double> lambda);

nlohmann::json scene_to_json(const Scene& scene);

/// Recovered x, B, t, the dual embedding and the atomic-norm objective.
nlohmann::json output_to_json(const SolverOutput<double>& out, SolverMode mode,
                              const AdmmParams& params);

///
/// Matrices of one generator for cross-checking selector-matrix
/// reconstructions: T(B) and every T_{g_i}(B) with its band coefficients.
///
nlohmann::json fixture_to_json(const GeneratorTensor<double>& b,
                               const std::vector<FrequencyBand>& bands);

nlohmann::json read_json(const std::string& path);

} // namespace fsan::experiment

#endif // FSAN_EXPERIMENT_IO_HPP
