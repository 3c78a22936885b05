#include "ister/checkpoint.hpp"

#include <json.hpp>

#include "ister/error.hpp"
#include "ister/io.hpp"

namespace ister::model {

using nlohmann::json;

namespace {

json config_to_json(const ModelConfig& c)
{
    return json{{"lookback", c.lookback},
                {"horizon", c.horizon},
                {"channels", c.channels},
                {"width", c.width},
                {"top_k", c.top_k},
                {"blocks", c.blocks},
                {"heads", c.heads},
                {"ffn_multiple", c.ffn_multiple},
                {"period_attention", to_string(c.period_attention)},
                {"channel_attention", to_string(c.channel_attention)},
                {"dropout", c.dropout},
                {"decomp_kernel", c.decomp_kernel}};
}

ModelConfig config_from_json(const json& j)
{
    ModelConfig c;
    c.lookback = j.at("lookback").get<std::size_t>();
    c.horizon = j.at("horizon").get<std::size_t>();
    c.channels = j.at("channels").get<std::size_t>();
    c.width = j.at("width").get<std::size_t>();
    c.top_k = j.at("top_k").get<std::size_t>();
    c.blocks = j.at("blocks").get<std::size_t>();
    c.heads = j.at("heads").get<std::size_t>();
    c.ffn_multiple = j.at("ffn_multiple").get<std::size_t>();
    c.period_attention = parse_attention_kind(j.at("period_attention").get<std::string>());
    c.channel_attention = parse_attention_kind(j.at("channel_attention").get<std::string>());
    c.dropout = j.at("dropout").get<double>();
    c.decomp_kernel = j.at("decomp_kernel").get<long>();
    return c;
}

} // namespace

std::string checkpoint_json(const IsterModel& model, const CheckpointMeta& meta)
{
    json doc;
    doc["format"] = "ister-checkpoint";
    doc["version"] = kCheckpointVersion;
    doc["config"] = config_to_json(model.config());
    json m;
    m["channel_names"] = meta.channel_names;
    m["variant"] = meta.variant;
    if (meta.scaler) {
        m["scaler"] = json{{"mean", meta.scaler->mean()}, {"sd", meta.scaler->sd()}};
    }
    doc["meta"] = std::move(m);
    json params = json::array();
    for (const auto& p : model.parameters()) {
        params.push_back(json{{"name", p.name},
                              {"shape", p.value.shape()},
                              {"data", std::vector<double>(p.value.data().begin(), p.value.data().end())}});
    }
    doc["parameters"] = std::move(params);
    return doc.dump(1) + "\n";
}

Checkpoint parse_checkpoint(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("checkpoint is not valid JSON: ") + e.what());
    }
    try {
        if (doc.at("format").get<std::string>() != "ister-checkpoint") {
            throw DataError("not an ister checkpoint");
        }
        if (doc.at("version").get<int>() != kCheckpointVersion) {
            throw DataError("unsupported checkpoint version " + std::to_string(doc.at("version").get<int>()));
        }
        auto config = config_from_json(doc.at("config"));
        auto model = IsterModel::init(config, 0);
        nn::ParameterList values;
        for (const auto& p : doc.at("parameters")) {
            values.push_back({p.at("name").get<std::string>(),
                              ad::DiffArray::from(p.at("shape").get<ad::Shape>(), p.at("data").get<std::vector<double>>())});
        }
        model.load_parameters(values);
        CheckpointMeta meta;
        const auto& m = doc.at("meta");
        meta.channel_names = m.at("channel_names").get<std::vector<std::string>>();
        meta.variant = m.at("variant").get<std::string>();
        if (m.contains("scaler")) {
            meta.scaler = data::StandardScaler(m["scaler"].at("mean").get<std::vector<double>>(),
                                               m["scaler"].at("sd").get<std::vector<double>>());
        }
        return Checkpoint{std::move(model), std::move(meta)};
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed checkpoint: ") + e.what());
    }
}

void save_checkpoint(const std::filesystem::path& path, const IsterModel& model, const CheckpointMeta& meta)
{
    io::write_text_atomic(path, checkpoint_json(model, meta));
}

Checkpoint load_checkpoint(const std::filesystem::path& path)
{
    return parse_checkpoint(io::read_text(path));
}

} // namespace ister::model
