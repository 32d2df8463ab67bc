#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mmq/errors.hpp"
#include "mmq/model.hpp"

namespace mmq {

namespace {

using nlohmann::json;

IntensityCurve parse_curve(const json& j, const std::string& where) {
    if (!j.is_object()) throw ValidationError(where + ": intensity must be an object");
    const std::string type = j.value("type", "exponential");
    if (type == "exponential") {
        if (!j.contains("A") || !j.contains("k"))
            throw ValidationError(where + ": exponential intensity needs fields A and k");
        return IntensityCurve::exponential(j.at("A").get<double>(), j.at("k").get<double>());
    }
    if (type == "tabulated") {
        if (!j.contains("deltas") || !j.contains("values"))
            throw ValidationError(where + ": tabulated intensity needs deltas and values");
        return IntensityCurve::tabulated(j.at("deltas").get<Vec>(), j.at("values").get<Vec>());
    }
    throw ValidationError(where + ": unknown intensity type '" + type + "'");
}

SizeDist parse_sizes(const json& j, const std::string& where) {
    SizeDist dist;
    dist.atoms.clear();
    for (const auto& a : j) {
        SizeDist::Atom atom;
        if (a.is_array()) {
            atom.size = a.at(0).get<double>();
            atom.weight = a.at(1).get<double>();
        } else {
            atom.size = a.at("size").get<double>();
            atom.weight = a.at("weight").get<double>();
        }
        dist.atoms.push_back(atom);
    }
    if (dist.atoms.empty()) throw ValidationError(where + ": empty size distribution");
    return dist;
}

TierSide parse_tier_side(const json& j, const std::string& where) {
    TierSide side;
    side.intensity = parse_curve(j.at("intensity"), where);
    if (j.contains("sizes")) side.sizes = parse_sizes(j.at("sizes"), where);
    side.fixed_cost = j.value("cost", 0.0);
    return side;
}

json curve_to_json(const IntensityCurve& c) {
    json j;
    if (c.is_exponential()) {
        j["type"] = "exponential";
        j["A"] = c.scale();
        j["k"] = c.decay();
    } else {
        j["type"] = "tabulated";
        j["deltas"] = c.knots();
        j["values"] = c.values();
    }
    return j;
}

json sizes_to_json(const SizeDist& dist) {
    json arr = json::array();
    for (const auto& a : dist.atoms) arr.push_back({{"size", a.size}, {"weight", a.weight}});
    return arr;
}

} // namespace

MarketSpec parse_market_spec(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("spec: invalid JSON: ") + e.what());
    }

    try {
        MarketSpec spec;
        if (!j.contains("assets") || !j.at("assets").is_array())
            throw ValidationError("spec: missing 'assets' array");
        int idx = 0;
        for (const auto& ja : j.at("assets")) {
            AssetSpec a;
            a.name = ja.value("name", "asset" + std::to_string(idx));
            a.sigma = ja.value("sigma", 0.0);
            a.z = ja.value("z", 1.0);
            a.Q = ja.value("Q", 0.0);
            a.s0 = ja.value("s0", 100.0);
            if (ja.contains("intensity")) {
                a.bid_intensity = parse_curve(ja.at("intensity"), a.name);
                a.ask_intensity = a.bid_intensity;
            }
            if (ja.contains("bid_intensity")) a.bid_intensity = parse_curve(ja.at("bid_intensity"), a.name);
            if (ja.contains("ask_intensity")) a.ask_intensity = parse_curve(ja.at("ask_intensity"), a.name);
            spec.assets.push_back(std::move(a));
            ++idx;
        }
        const int d = static_cast<int>(spec.assets.size());

        if (j.contains("correlation")) {
            const auto& rows = j.at("correlation");
            spec.correlation = Mat(static_cast<int>(rows.size()), static_cast<int>(rows.size()));
            int i = 0;
            for (const auto& row : rows) {
                if (static_cast<int>(row.size()) != spec.correlation.cols())
                    throw ValidationError("spec: correlation rows have unequal lengths");
                int k = 0;
                for (const auto& v : row) spec.correlation(i, k++) = v.get<double>();
                ++i;
            }
        } else if (d == 1) {
            spec.correlation = Mat::identity(1);
        } else {
            throw ValidationError("spec: missing 'correlation'");
        }

        if (j.contains("drift")) spec.drift = j.at("drift").get<Vec>();
        if (j.contains("q0")) spec.q0 = j.at("q0").get<Vec>();
        if (!j.contains("gamma")) throw ValidationError("spec: missing 'gamma'");
        spec.gamma = j.at("gamma").get<double>();
        if (!j.contains("horizon")) throw ValidationError("spec: missing 'horizon'");
        spec.horizon = j.at("horizon").get<double>();

        const std::string obj = j.value("objective", "B");
        if (obj == "A" || obj == "ModelA")
            spec.objective = Objective::ModelA;
        else if (obj == "B" || obj == "ModelB")
            spec.objective = Objective::ModelB;
        else
            throw ValidationError("spec: objective must be 'A' or 'B'");

        if (j.contains("delta_floor")) spec.delta_floor = j.at("delta_floor").get<double>();

        if (j.contains("tiers")) {
            const auto& per_asset = j.at("tiers");
            if (static_cast<int>(per_asset.size()) != d)
                throw ValidationError("spec: tiers must list one entry per asset");
            spec.tiers.resize(d);
            for (int i = 0; i < d; ++i) {
                for (const auto& jt : per_asset.at(i)) {
                    TierSpec tier;
                    const std::string where = spec.assets[i].name;
                    tier.bid = parse_tier_side(jt.at("bid"), where + " bid");
                    tier.ask = parse_tier_side(jt.at("ask"), where + " ask");
                    spec.tiers[i].push_back(std::move(tier));
                }
            }
        }
        return spec;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("spec: malformed field: ") + e.what());
    }
}

MarketSpec load_market_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open spec file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_market_spec(buf.str());
}

std::string to_json(const MarketSpec& spec) {
    json j;
    j["assets"] = json::array();
    for (const auto& a : spec.assets) {
        json ja{{"name", a.name}, {"sigma", a.sigma}, {"z", a.z}, {"Q", a.Q}, {"s0", a.s0}};
        if (a.bid_intensity && a.ask_intensity && *a.bid_intensity == *a.ask_intensity)
            ja["intensity"] = curve_to_json(*a.bid_intensity);
        else {
            if (a.bid_intensity) ja["bid_intensity"] = curve_to_json(*a.bid_intensity);
            if (a.ask_intensity) ja["ask_intensity"] = curve_to_json(*a.ask_intensity);
        }
        j["assets"].push_back(std::move(ja));
    }
    const int d = spec.correlation.rows();
    j["correlation"] = json::array();
    for (int i = 0; i < d; ++i) {
        json row = json::array();
        for (int k = 0; k < d; ++k) row.push_back(spec.correlation(i, k));
        j["correlation"].push_back(std::move(row));
    }
    j["gamma"] = spec.gamma;
    j["objective"] = spec.objective == Objective::ModelA ? "A" : "B";
    j["horizon"] = spec.horizon;
    if (!spec.drift.empty()) j["drift"] = spec.drift;
    if (!spec.q0.empty()) j["q0"] = spec.q0;
    if (spec.delta_floor) j["delta_floor"] = *spec.delta_floor;
    if (!spec.tiers.empty()) {
        json per_asset = json::array();
        for (const auto& tiers : spec.tiers) {
            json list = json::array();
            for (const auto& t : tiers) {
                json jt;
                jt["bid"] = {{"intensity", curve_to_json(t.bid.intensity)},
                             {"sizes", sizes_to_json(t.bid.sizes)},
                             {"cost", t.bid.fixed_cost}};
                jt["ask"] = {{"intensity", curve_to_json(t.ask.intensity)},
                             {"sizes", sizes_to_json(t.ask.sizes)},
                             {"cost", t.ask.fixed_cost}};
                list.push_back(std::move(jt));
            }
            per_asset.push_back(std::move(list));
        }
        j["tiers"] = std::move(per_asset);
    }
    return j.dump(2);
}

} // namespace mmq
