#include "flagforge/synth.hpp"

#include <filesystem>
#include <fstream>

namespace flagforge {

namespace {

using json = nlohmann::ordered_json;

struct Builder {
    NodeId next_id = 1;

    json node(const std::string& type) {
        json j;
        j["id"] = next_id++;
        j["nodeType"] = type;
        j["src"] = "0:0:0";
        return j;
    }

    json literal(Rng& rng) {
        json j = node("Literal");
        j["kind"] = "number";
        j["value"] = std::to_string(rng.index(100));
        j["typeDescriptions"] = {{"typeString", "int_const"}};
        return j;
    }

    json identifier(const std::string& name, NodeId target) {
        json j = node("Identifier");
        j["name"] = name;
        j["referencedDeclaration"] = target;
        return j;
    }

    json expr_statement(json expr) {
        json j = node("ExpressionStatement");
        j["expression"] = std::move(expr);
        return j;
    }

    json call_statement(const std::string& callee, NodeId target) {
        json call = node("FunctionCall");
        call["expression"] = identifier(callee, target);
        call["arguments"] = json::array();
        return expr_statement(std::move(call));
    }

    json assignment_statement(Rng& rng, const std::string& var, NodeId target) {
        json a = node("Assignment");
        a["operator"] = "=";
        a["leftHandSide"] = identifier(var, target);
        a["rightHandSide"] = literal(rng);
        return expr_statement(std::move(a));
    }

    json block(std::vector<json> statements) {
        json j = node("Block");
        j["statements"] = json::array();
        for (auto& s : statements) j["statements"].push_back(std::move(s));
        return j;
    }

    json function(const std::string& name, json body) {
        json j = node("FunctionDefinition");
        j["name"] = name;
        j["visibility"] = "public";
        json params = node("ParameterList");
        params["parameters"] = json::array();
        json rets = node("ParameterList");
        rets["parameters"] = json::array();
        j["parameters"] = std::move(params);
        j["returnParameters"] = std::move(rets);
        j["body"] = std::move(body);
        return j;
    }

    json state_var(const std::string& name) {
        json j = node("VariableDeclaration");
        j["name"] = name;
        j["stateVariable"] = true;
        j["typeDescriptions"] = {{"typeString", "uint256"}};
        return j;
    }
};

}  // namespace

json synth_contract_ast(Rng& rng, const std::string& contract_name, bool vulnerable) {
    Builder b;
    json unit = b.node("SourceUnit");
    json contract = b.node("ContractDefinition");
    contract["name"] = contract_name;

    json balance = b.state_var("balance");
    NodeId balance_id = balance["id"].get<NodeId>();

    // Helper first so the target function can reference its id.
    std::vector<json> helper_stmts;
    int n_helper = 1 + static_cast<int>(rng.index(2));
    for (int i = 0; i < n_helper; ++i)
        helper_stmts.push_back(b.expr_statement(b.literal(rng)));
    json helper = b.function("helper", b.block(std::move(helper_stmts)));
    NodeId helper_id = helper["id"].get<NodeId>();

    std::vector<json> stmts;
    stmts.push_back(b.call_statement("helper", helper_id));
    if (vulnerable) {
        // planted motif: if (balance) { balance = <literal>; }
        json cond = b.identifier("balance", balance_id);
        json body = b.block({b.assignment_statement(rng, "balance", balance_id)});
        json ifs = b.node("IfStatement");
        ifs["condition"] = std::move(cond);
        ifs["trueBody"] = std::move(body);
        stmts.push_back(std::move(ifs));
    }
    int filler = 1 + static_cast<int>(rng.index(3));
    for (int i = 0; i < filler; ++i) stmts.push_back(b.expr_statement(b.literal(rng)));
    json handle = b.function("handle", b.block(std::move(stmts)));

    contract["nodes"] = json::array();
    contract["nodes"].push_back(std::move(balance));
    contract["nodes"].push_back(std::move(helper));
    contract["nodes"].push_back(std::move(handle));
    unit["nodes"] = json::array();
    unit["nodes"].push_back(std::move(contract));
    return unit;
}

void generate_planted_corpus(const std::string& dir, int n_contracts, std::uint64_t seed) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    Rng rng(seed);
    json labels;
    for (int i = 0; i < n_contracts; ++i) {
        bool vulnerable = i % 2 == 1;
        char name[32];
        std::snprintf(name, sizeof(name), "c%03d", i);
        json ast = synth_contract_ast(rng, name, vulnerable);
        std::string file = std::string(name) + ".sol";
        std::ofstream out(fs::path(dir) / (file + ".ast.json"), std::ios::binary);
        out << ast.dump(1) << "\n";
        labels[file] = {{"handle", vulnerable ? "vulnerable" : "safe"}, {"helper", "safe"}};
    }
    std::ofstream out(fs::path(dir) / "labels.json", std::ios::binary);
    out << labels.dump(1) << "\n";
}

namespace {

json random_statements(Builder& b, Rng& rng, int depth);

json random_block(Builder& b, Rng& rng, int depth) {
    json blk = b.node("Block");
    blk["statements"] = json::array();
    int n = static_cast<int>(rng.index(5));  // empty blocks allowed
    for (int i = 0; i < n; ++i) blk["statements"].push_back(random_statements(b, rng, depth - 1));
    return blk;
}

json random_statements(Builder& b, Rng& rng, int depth) {
    std::size_t pick = depth <= 0 ? 0 : rng.index(5);
    switch (pick) {
        case 1: {
            json ifs = b.node("IfStatement");
            ifs["condition"] = b.literal(rng);
            ifs["trueBody"] = random_block(b, rng, depth);
            if (rng.index(2) == 0) ifs["falseBody"] = random_block(b, rng, depth);
            return ifs;
        }
        case 2: {
            json w = b.node("WhileStatement");
            w["condition"] = b.literal(rng);
            w["body"] = random_block(b, rng, depth);
            return w;
        }
        case 3: {
            json f = b.node("ForStatement");
            if (rng.index(3) != 0) f["condition"] = b.literal(rng);
            f["body"] = random_block(b, rng, depth);
            return f;
        }
        case 4:
            return random_block(b, rng, depth);
        default:
            return b.expr_statement(b.literal(rng));
    }
}

}  // namespace

json random_statement_ast(Rng& rng, int max_depth) {
    Builder b;
    json unit = b.node("SourceUnit");
    json contract = b.node("ContractDefinition");
    contract["name"] = "R";
    contract["nodes"] = json::array();
    int funcs = 1 + static_cast<int>(rng.index(3));
    for (int i = 0; i < funcs; ++i)
        contract["nodes"].push_back(
            b.function("f" + std::to_string(i), random_block(b, rng, max_depth)));
    unit["nodes"] = json::array();
    unit["nodes"].push_back(std::move(contract));
    return unit;
}

}  // namespace flagforge
