#ifndef FLOWNET_NETWORK_IO_HPP
#define FLOWNET_NETWORK_IO_HPP

#include <string>

#include <nlohmann/json.hpp>

#include "flownet/common.hpp"
#include "flownet/network.hpp"

namespace flownet {

// Schema: {vertices:[{id,x,y}], edges:[{tail,head,length,prob}],
//          sources:[ids], outlets:[ids]}
inline nlohmann::json network_to_json(const DirectedNetwork& net) {
    nlohmann::json j;
    j["vertices"] = nlohmann::json::array();
    for (const auto& v : net.vertices)
        j["vertices"].push_back({{"id", v.id}, {"x", v.x}, {"y", v.y}});
    j["edges"] = nlohmann::json::array();
    for (const auto& e : net.edges)
        j["edges"].push_back({{"tail", e.tail},
                              {"head", e.head},
                              {"length", e.length},
                              {"prob", e.prob}});
    auto cls = classify_vertices(net);
    j["sources"] = cls.sources;
    j["outlets"] = cls.outlets;
    return j;
}

inline std::string write_network(const DirectedNetwork& net) {
    return network_to_json(net).dump(2) + "\n";
}

inline DirectedNetwork network_from_json(const nlohmann::json& j) {
    DirectedNetwork net;
    try {
        for (const auto& jv : j.at("vertices")) {
            Vertex v{jv.at("id").get<int>(), jv.at("x").get<double>(),
                     jv.at("y").get<double>()};
            if (v.id != net.size())
                throw validation_error("vertex ids must be 0..n-1 in order");
            net.vertices.push_back(v);
        }
        for (const auto& je : j.at("edges"))
            net.edges.push_back({je.at("tail").get<int>(), je.at("head").get<int>(),
                                 je.at("length").get<double>(),
                                 je.at("prob").get<double>()});
        net.finalize();
        // sources/outlets are derived; cross-check against the file
        auto cls = classify_vertices(net);
        std::vector<int> src = j.at("sources").get<std::vector<int>>();
        std::vector<int> out = j.at("outlets").get<std::vector<int>>();
        if (src != cls.sources || out != cls.outlets)
            throw validation_error("source/outlet lists inconsistent with edges");
    } catch (const nlohmann::json::exception& e) {
        throw validation_error(std::string("network schema violation: ") + e.what());
    }
    return net;
}

inline DirectedNetwork read_network(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw validation_error(std::string("invalid network JSON: ") + e.what());
    }
    return network_from_json(j);
}

}  // namespace flownet

#endif
