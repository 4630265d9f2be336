#pragma once

#include "flagforge/ast.hpp"
#include "flagforge/tensor.hpp"

namespace flagforge {

/// Compact-JSON AST for one synthetic contract. Vulnerable contracts plant
/// an if/assignment motif over the state variable; safe contracts carry
/// plain expression statements of comparable size. Both call the helper.
nlohmann::ordered_json synth_contract_ast(Rng& rng, const std::string& contract_name,
                                          bool vulnerable);

/// Write a two-class corpus (cNNN.sol.ast.json files plus labels.json)
/// into `dir`. Roughly half the contracts get the planted motif.
/// Deterministic in (dir contents, n_contracts, seed).
void generate_planted_corpus(const std::string& dir, int n_contracts, std::uint64_t seed);

/// Random statement-heavy AST (nested blocks, ifs, loops) for structural
/// property tests.
nlohmann::ordered_json random_statement_ast(Rng& rng, int max_depth = 4);

}  // namespace flagforge
