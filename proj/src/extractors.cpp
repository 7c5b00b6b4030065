#include "posecloak/extractors.hpp"

#include <set>

#include "toy_factories.hpp"

namespace posecloak {

namespace {

using nlohmann::json;

void check_param_keys(const RoleSpec& spec, const std::set<std::string>& allowed) {
    for (auto it = spec.params.begin(); it != spec.params.end(); ++it) {
        if (!allowed.contains(it.key())) {
            throw ConfigurationError("unknown parameter '" + it.key() + "' for extractor '" +
                                     spec.name + "'");
        }
    }
}

std::uint64_t param_seed(const RoleSpec& spec) {
    return spec.params.value("seed", 0ULL);
}

int param_channels(const RoleSpec& spec) {
    return spec.params.value("latent_channels", 4);
}

std::shared_ptr<const LatentEncoder> resolve_encoder(const RoleSpec& spec) {
    if (spec.name == "toy") {
        check_param_keys(spec, {"seed", "latent_channels"});
        return detail::make_toy_encoder(param_seed(spec), param_channels(spec));
    }
    if (spec.name == "toy-identity") {
        check_param_keys(spec, {"side"});
        return make_identity_encoder(spec.params.value("side", 8));
    }
    throw ResolutionError("no latent encoder registered under '" + spec.name + "'");
}

std::shared_ptr<const SemanticEncoder> resolve_semantic(const RoleSpec& spec) {
    if (spec.name == "toy") {
        check_param_keys(spec, {"seed"});
        return detail::make_toy_semantic(param_seed(spec));
    }
    throw ResolutionError("no semantic encoder registered under '" + spec.name + "'");
}

std::shared_ptr<const ReferenceFeatureExtractor> resolve_reference(const RoleSpec& spec) {
    if (spec.name == "toy") {
        check_param_keys(spec, {"seed", "latent_channels", "index"});
        return detail::make_toy_reference(param_seed(spec), param_channels(spec),
                                          spec.params.value("index", 0));
    }
    throw ResolutionError("no reference extractor registered under '" + spec.name + "'");
}

std::shared_ptr<const NoisePredictor> resolve_predictor(const RoleSpec& spec) {
    if (spec.name == "toy") {
        check_param_keys(spec, {"seed", "latent_channels"});
        return detail::make_toy_predictor(param_seed(spec), param_channels(spec));
    }
    throw ResolutionError("no noise predictor registered under '" + spec.name + "'");
}

std::shared_ptr<const PoseConditioner> resolve_conditioner(const RoleSpec& spec) {
    if (spec.name == "toy") {
        check_param_keys(spec, {"seed"});
        return detail::make_toy_conditioner(param_seed(spec));
    }
    throw ResolutionError("no pose conditioner registered under '" + spec.name + "'");
}

std::shared_ptr<const PerceptualDistance> resolve_perceptual(const RoleSpec& spec) {
    if (spec.name == "toy") {
        check_param_keys(spec, {"seed"});
        return detail::make_toy_perceptual(param_seed(spec));
    }
    throw ResolutionError("no perceptual distance registered under '" + spec.name + "'");
}

std::shared_ptr<const LatentDecoder> resolve_decoder(const RoleSpec& spec) {
    if (spec.name == "toy") {
        check_param_keys(spec, {"seed", "latent_channels"});
        return detail::make_toy_decoder(param_seed(spec), param_channels(spec));
    }
    throw ResolutionError("no latent decoder registered under '" + spec.name + "'");
}

RoleSpec role_from_json(const json& j) {
    RoleSpec spec;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key() != "name" && it.key() != "params" && it.key() != "weights") {
            throw ConfigurationError("unknown extractor role key '" + it.key() + "'");
        }
    }
    spec.name = j.value("name", "");
    spec.params = j.value("params", json::object());
    spec.weights = j.value("weights", "");
    return spec;
}

json role_to_json(const RoleSpec& spec) {
    return json{{"name", spec.name}, {"params", spec.params}, {"weights", spec.weights}};
}

} // namespace

BundleSpec BundleSpec::preset(const std::string& name) {
    if (name != "toy-default") {
        throw ResolutionError("unknown bundle preset '" + name + "'");
    }
    BundleSpec spec;
    json base = {{"seed", 0}, {"latent_channels", 4}};
    spec.encoder = {"toy", base, ""};
    spec.semantic = {"toy", {{"seed", 0}}, ""};
    for (int k = 0; k < 3; ++k) {
        spec.references.push_back({"toy", {{"seed", 0}, {"latent_channels", 4}, {"index", k}}, ""});
    }
    spec.predictor = {"toy", base, ""};
    spec.conditioner = {"toy", {{"seed", 0}}, ""};
    spec.perceptual = {"toy", {{"seed", 0}}, ""};
    spec.decoder = {"toy", base, ""};
    return spec;
}

BundleSpec BundleSpec::from_json(const json& section) {
    if (section.contains("preset")) {
        for (auto it = section.begin(); it != section.end(); ++it) {
            if (it.key() != "preset") {
                throw ConfigurationError("extractor preset cannot be mixed with explicit roles");
            }
        }
        return preset(section.at("preset").get<std::string>());
    }
    static const std::set<std::string> kRoles = {"encoder",     "semantic",   "references",
                                                 "predictor",   "conditioner", "perceptual",
                                                 "decoder"};
    for (auto it = section.begin(); it != section.end(); ++it) {
        if (!kRoles.contains(it.key())) {
            throw ConfigurationError("unknown extractor role '" + it.key() + "'");
        }
    }
    BundleSpec spec;
    spec.encoder = role_from_json(section.at("encoder"));
    spec.semantic = role_from_json(section.at("semantic"));
    for (const auto& r : section.at("references")) {
        spec.references.push_back(role_from_json(r));
    }
    spec.predictor = role_from_json(section.at("predictor"));
    spec.conditioner = role_from_json(section.at("conditioner"));
    spec.perceptual = role_from_json(section.at("perceptual"));
    if (section.contains("decoder")) {
        spec.decoder = role_from_json(section.at("decoder"));
    }
    return spec;
}

json BundleSpec::to_json() const {
    json refs = json::array();
    for (const auto& r : references) {
        refs.push_back(role_to_json(r));
    }
    json out = {{"encoder", role_to_json(encoder)},       {"semantic", role_to_json(semantic)},
                {"references", refs},                     {"predictor", role_to_json(predictor)},
                {"conditioner", role_to_json(conditioner)}, {"perceptual", role_to_json(perceptual)}};
    if (!decoder.name.empty()) {
        out["decoder"] = role_to_json(decoder);
    }
    return out;
}

ExtractorBundle resolve_bundle(const BundleSpec& spec) {
    if (spec.references.empty()) {
        throw ConfigurationError("bundle requires at least one reference extractor");
    }
    // Resolve into locals first so a failure leaves no partial bundle.
    auto encoder = resolve_encoder(spec.encoder);
    auto semantic = resolve_semantic(spec.semantic);
    std::vector<std::shared_ptr<const ReferenceFeatureExtractor>> references;
    for (const auto& r : spec.references) {
        references.push_back(resolve_reference(r));
    }
    auto predictor = resolve_predictor(spec.predictor);
    auto conditioner = resolve_conditioner(spec.conditioner);
    auto perceptual = resolve_perceptual(spec.perceptual);
    std::shared_ptr<const LatentDecoder> decoder;
    if (!spec.decoder.name.empty()) {
        decoder = resolve_decoder(spec.decoder);
    }

    LatentShape latent = encoder->latent_shape();
    if (predictor->latent_shape() != latent) {
        throw ConfigurationError("noise predictor latent shape disagrees with the encoder");
    }
    for (std::size_t k = 0; k < references.size(); ++k) {
        if (references[k]->input_shape() != latent) {
            throw ConfigurationError("reference extractor " + std::to_string(k) +
                                     " latent shape disagrees with the encoder");
        }
    }
    if (conditioner->conditioning_dim() != predictor->conditioning_dim()) {
        throw ConfigurationError("conditioner and predictor disagree on the conditioning width");
    }
    if (decoder && decoder->input_shape() != latent) {
        throw ConfigurationError("decoder latent shape disagrees with the encoder");
    }

    ExtractorBundle bundle;
    bundle.encoder = std::move(encoder);
    bundle.semantic = std::move(semantic);
    bundle.references = std::move(references);
    bundle.predictor = std::move(predictor);
    bundle.conditioner = std::move(conditioner);
    bundle.perceptual = std::move(perceptual);
    bundle.decoder = std::move(decoder);
    return bundle;
}

json registry_catalog() {
    return json{{"encoder", {"toy", "toy-identity"}}, {"semantic", {"toy"}},
                {"references", {"toy"}},              {"predictor", {"toy"}},
                {"conditioner", {"toy"}},             {"perceptual", {"toy"}},
                {"decoder", {"toy"}}};
}

} // namespace posecloak
