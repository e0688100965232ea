#include <fsan/experiment/io.hpp>

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <fsan/experiment/config.hpp>

namespace fsan::experiment
{

using nlohmann::json;

namespace
{

const json& field(const json& j, const char* key)
{
    if (!j.is_object() || !j.contains(key))
    {
        throw std::invalid_argument(std::string("missing field '") + key + "'");
    }
    return j.at(key);
}

void check_schema(const json& j, const char* expected)
{
    const json& s = field(j, "schema");
    if (!s.is_string() || s.get<std::string>() != expected)
    {
        throw std::invalid_argument(std::string("schema mismatch: expected '") +
                                    expected + "'");
    }
}

std::vector<double> reals(const json& j, const char* key)
{
    const json& a = field(j, key);
    if (!a.is_array()) throw std::invalid_argument(std::string("'") + key + "' must be an array");
    std::vector<double> v;
    v.reserve(a.size());
    for (const auto& e : a)
    {
        if (!e.is_number()) throw std::invalid_argument(std::string("'") + key + "' holds a non-number");
        v.push_back(e.get<double>());
    }
    return v;
}

} // namespace

json vector_to_json(const CVector<double>& v)
{
    std::vector<double> re(v.size()), im(v.size());
    for (Eigen::Index k = 0; k < v.size(); ++k)
    {
        re[k] = v[k].real();
        im[k] = v[k].imag();
    }
    return {{"re", re}, {"im", im}};
}

CVector<double> vector_from_json(const json& j)
{
    const auto re = reals(j, "re");
    const auto im = reals(j, "im");
    if (re.size() != im.size()) throw std::invalid_argument("re/im length mismatch");
    CVector<double> v(Eigen::Index(re.size()));
    for (std::size_t k = 0; k < re.size(); ++k) v[Eigen::Index(k)] = {re[k], im[k]};
    return v;
}

json matrix_to_json(const CMatrix<double>& m)
{
    std::vector<double> re, im;
    re.reserve(m.size());
    im.reserve(m.size());
    for (Eigen::Index r = 0; r < m.rows(); ++r)
    {
        for (Eigen::Index c = 0; c < m.cols(); ++c)
        {
            re.push_back(m(r, c).real());
            im.push_back(m(r, c).imag());
        }
    }
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"re", re}, {"im", im}};
}

CMatrix<double> matrix_from_json(const json& j)
{
    const auto rows = field(j, "rows").get<Eigen::Index>();
    const auto cols = field(j, "cols").get<Eigen::Index>();
    const auto re = reals(j, "re");
    const auto im = reals(j, "im");
    if (rows < 0 || cols < 0 || re.size() != std::size_t(rows * cols) ||
        im.size() != re.size())
    {
        throw std::invalid_argument("matrix size does not match rows*cols");
    }
    CMatrix<double> m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
    {
        for (Eigen::Index c = 0; c < cols; ++c, ++k) m(r, c) = {re[k], im[k]};
    }
    return m;
}

json generator_to_json(const GeneratorTensor<double>& b)
{
    std::vector<int> shape;
    for (int n : b.dims().sizes()) shape.push_back(2 * n - 1);
    json j = vector_to_json(b.data());
    j["shape"] = shape;
    return j;
}

GeneratorTensor<double> generator_from_json(const json& j)
{
    const auto shape = field(j, "shape").get<std::vector<int>>();
    std::vector<int> sizes;
    for (int s : shape)
    {
        if (s < 1 || s % 2 == 0) throw std::invalid_argument("generator shape must be odd");
        sizes.push_back((s + 1) / 2);
    }
    const Dims dims(sizes);
    CVector<double> data = vector_from_json(j);
    if (data.size() != dims.generator_size())
    {
        throw std::invalid_argument("generator data length does not match shape");
    }
    return GeneratorTensor<double>(dims, std::move(data));
}

json bands_to_json(const std::vector<FrequencyBand>& bands)
{
    json a = json::array();
    for (const auto& b : bands) a.push_back({b.f_low, b.f_high});
    return a;
}

std::vector<FrequencyBand> bands_from_json(const json& j)
{
    if (!j.is_array()) throw std::invalid_argument("'bands' must be an array");
    std::vector<FrequencyBand> out;
    for (const auto& b : j)
    {
        if (!b.is_array() || b.size() != 2)
        {
            throw std::invalid_argument("each band is [f_low, f_high]");
        }
        FrequencyBand band{b[0].get<double>(), b[1].get<double>()};
        band.validate();
        out.push_back(band);
    }
    return out;
}

json instance_to_json(const Instance& inst)
{
    json j;
    j["schema"] = instance_schema;
    j["dims"] = inst.meas.dims.sizes();
    j["bands"] = bands_to_json(inst.bands);
    j["mode"] = to_string(inst.mode);
    if (inst.lambda) j["lambda"] = *inst.lambda;
    j["y"] = vector_to_json(inst.meas.y);
    j["phi"] = vector_to_json(inst.meas.phi);
    if (inst.truth_model)
    {
        CVector<double> g(Eigen::Index(inst.truth_model->gains.size()));
        for (std::size_t l = 0; l < inst.truth_model->gains.size(); ++l)
        {
            g[Eigen::Index(l)] = inst.truth_model->gains[l];
        }
        j["truth"]["freqs"] = inst.truth_model->freqs;
        j["truth"]["gains"] = vector_to_json(g);
    }
    if (inst.truth_x.size() > 0) j["truth"]["x"] = vector_to_json(inst.truth_x);
    return j;
}

Instance instance_from_json(const json& j)
{
    check_schema(j, instance_schema);
    Instance inst;
    try
    {
        inst.meas.dims = Dims(field(j, "dims").get<std::vector<int>>());
        inst.bands = bands_from_json(field(j, "bands"));
        inst.mode = parse_solver_mode(field(j, "mode").get<std::string>());
        if (j.contains("lambda")) inst.lambda = j.at("lambda").get<double>();
        inst.meas.y = vector_from_json(field(j, "y"));
        inst.meas.phi = vector_from_json(field(j, "phi"));
        if (j.contains("truth"))
        {
            const json& t = j.at("truth");
            if (t.contains("freqs"))
            {
                SpectralModel<double> m;
                m.freqs = t.at("freqs").get<std::vector<std::vector<double>>>();
                const CVector<double> g = vector_from_json(field(t, "gains"));
                m.gains.assign(g.data(), g.data() + g.size());
                m.validate(inst.meas.dims.rank());
                inst.truth_model = std::move(m);
            }
            if (t.contains("x")) inst.truth_x = vector_from_json(t.at("x"));
        }
    }
    catch (const json::exception& e)
    {
        throw std::invalid_argument(std::string("instance: ") + e.what());
    }
    inst.meas.validate();
    if (inst.bands.size() != inst.meas.dims.rank())
    {
        throw std::invalid_argument("instance: one band per dimension required");
    }
    if (inst.truth_x.size() != 0 && inst.truth_x.size() != inst.meas.dims.total())
    {
        throw std::invalid_argument("instance: truth.x length differs from N_D");
    }
    if (inst.mode == SolverMode::regularized && !inst.lambda)
    {
        throw std::invalid_argument("instance: regularized mode requires 'lambda'");
    }
    return inst;
}

Instance make_instance(const Scene& scene, const std::vector<FrequencyBand>& bands,
                       SolverMode mode, std::optional<double> lambda)
{
    Instance inst;
    inst.meas = scene.meas;
    inst.bands = bands;
    inst.mode = mode;
    if (mode == SolverMode::regularized) inst.lambda = lambda;
    inst.truth_model = scene.model;
    inst.truth_x = scene.x;
    return inst;
}

json scene_to_json(const Scene& scene)
{
    json j;
    j["schema"] = scene_schema;
    j["dims"] = scene.meas.dims.sizes();
    j["freqs"] = scene.model.freqs;
    CVector<double> g(Eigen::Index(scene.model.gains.size()));
    for (std::size_t l = 0; l < scene.model.gains.size(); ++l)
    {
        g[Eigen::Index(l)] = scene.model.gains[l];
    }
    j["gains"] = vector_to_json(g);
    j["x"] = vector_to_json(scene.x);
    j["y"] = vector_to_json(scene.meas.y);
    std::vector<int> mask(scene.meas.phi.size());
    for (Eigen::Index k = 0; k < scene.meas.phi.size(); ++k)
    {
        mask[k] = scene.meas.phi[k] != 0.0 ? 1 : 0;
    }
    j["mask"] = mask;
    j["noise_std"] = scene.noise_std;
    return j;
}

json output_to_json(const SolverOutput<double>& out, SolverMode mode,
                    const AdmmParams& params)
{
    json j;
    j["schema"] = output_schema;
    j["solver"] = "fs-admm";
    j["mode"] = to_string(mode);
    j["iterations"] = out.trace.size();
    j["params"] = {{"rho", params.rho},
                   {"varrho", params.varrho},
                   {"inner_iters", params.inner_iters},
                   {"max_iters", params.max_iters},
                   {"lambda", params.lambda},
                   {"retarget_each_sweep", params.retarget_each_sweep}};
    j["x_hat"] = vector_to_json(out.x_hat);
    j["b_hat"] = generator_to_json(out.b_hat);
    j["t_hat"] = out.t_hat;
    // Atomic-norm part of the objective, (Re B(0) + t) / 2.
    j["atomic_objective"] =
        0.5 * (out.b_hat.data()[out.b_hat.center_index()].real() + out.t_hat);
    if (!out.trace.empty())
    {
        const auto& last = out.trace.back();
        j["objective"] = last.objective;
        j["primal_residual"] = last.primal_residual;
        j["data_residual"] = last.data_residual;
        if (std::isfinite(last.nmse)) j["nmse"] = last.nmse;
    }
    j["dual_embedding"] = vector_to_json(out.dual_embedding);
    if (mode == SolverMode::regularized)
    {
        j["residual_embedding"] = vector_to_json(out.residual_embedding);
        j["dual_mismatch"] = out.dual_mismatch;
    }
    return j;
}

json fixture_to_json(const GeneratorTensor<double>& b,
                     const std::vector<FrequencyBand>& bands)
{
    if (bands.size() != b.dims().rank())
    {
        throw std::invalid_argument("fixture: one band per dimension required");
    }
    json j;
    j["schema"] = fixture_schema;
    j["dims"] = b.dims().sizes();
    j["bands"] = bands_to_json(bands);
    j["generator"] = generator_to_json(b);
    j["toeplitz"] = matrix_to_json(build_toeplitz(b));
    json tg = json::array();
    for (std::size_t i = 0; i < bands.size(); ++i)
    {
        const auto poly = band_polynomial<double>(bands[i]);
        tg.push_back({{"axis", i},
                      {"r0", poly.r0},
                      {"r1", {poly.r1.real(), poly.r1.imag()}},
                      {"matrix", matrix_to_json(build_tg(b, poly, i))}});
    }
    j["tg"] = tg;
    return j;
}

json read_json(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    try
    {
        return json::parse(in);
    }
    catch (const json::exception& e)
    {
        throw std::invalid_argument("'" + path + "': " + e.what());
    }
}

} // namespace fsan::experiment
