#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "delusim/chat.hpp"

// Deterministic scripted backends for offline runs and tests. The behaviors
// are parameterized by the request content only, so a single instance can
// serve concurrent conversations.
namespace delusim::mockllm {

// Marker emitted by the cautious assistant branch; the dampening-aware
// simulated user de-escalates when it sees it in the history.
inline constexpr const char* kCautionMarker = "ground this in verifiable facts";

const std::vector<std::string>& delusion_vocabulary();
const std::vector<std::string>& neutral_vocabulary();

// Fraction of delusion-vocabulary words in a text, per the mock vocabularies.
double delusion_word_fraction(const std::string& text);

// Assistant that validates and elaborates; switches to the cautious branch
// whenever the request carries a DelusionScore system prompt.
std::unique_ptr<chat::MockChatBackend> make_adaptive_assistant();

// Assistant that always amplifies, regardless of intervention prompts.
std::unique_ptr<chat::MockChatBackend> make_amplifier_assistant();

// Simulated user whose delusion-word fraction rises each round, and falls
// when recent assistant turns carry the caution marker.
std::unique_ptr<chat::MockChatBackend> make_escalating_simuser();

// Simulated user that stays on neutral vocabulary with a mild downward drift.
std::unique_ptr<chat::MockChatBackend> make_neutral_simuser();

// Sentence of `n_words` words with the given delusion-word fraction;
// deterministic in (fraction, salt).
std::string synthetic_sentence(double delusion_fraction, std::uint64_t salt, int n_words = 12);

}  // namespace delusim::mockllm
