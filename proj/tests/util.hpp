#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "flagforge/ast.hpp"

namespace testutil {

inline std::string fixture_dir() { return FIXTURE_DIR; }

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("missing test file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline flagforge::AstTree load_fixture(const std::string& name) {
    std::string path = fixture_dir() + "/" + name;
    return flagforge::parse_ast_json(read_file(path), path);
}

}  // namespace testutil
