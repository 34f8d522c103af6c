#include "rxnc/cipher.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace rxnc {

namespace {

// Simon z0 sequence (period 62) used by Simon32/64, copied from "The SIMON and
// SPECK Families of Lightweight Block Ciphers" (Beaulieu et al., 2013).
constexpr std::string_view kSimonZ0 = "11111010001001010110000111001101111101000100101011000011100110";

// Simeck32/64 round-constant bits from "The Simeck Family of Lightweight Block
// Ciphers" (Yang et al., CHES 2015): the period-31 m-sequence of the LFSR with
// feedback x^5 + x^2 + 1, bit i (LSB first) is the constant bit of round i.
constexpr std::uint32_t kSimeckSeq = 0x9A42BB1Fu;

constexpr Word kConstC = 0xFFFC;

inline int simon_z(int i) noexcept { return kSimonZ0[static_cast<std::size_t>(i % 62)] - '0'; }

inline int simeck_z(int i) noexcept { return static_cast<int>((kSimeckSeq >> (i % 31)) & 1u); }

}  // namespace

std::string_view cipher_name(CipherId c) {
    return c == CipherId::Simon32_64 ? "simon32_64" : "simeck32_64";
}

CipherId parse_cipher(std::string_view name) {
    std::string s(name);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (s == "simon" || s == "simon32_64" || s == "simon32/64") return CipherId::Simon32_64;
    if (s == "simeck" || s == "simeck32_64" || s == "simeck32/64") return CipherId::Simeck32_64;
    throw std::invalid_argument("unknown cipher '" + std::string(name) + "'");
}

Word round_fn(CipherId cipher, Word x) noexcept {
    if (cipher == CipherId::Simon32_64) {
        return static_cast<Word>((rotl(x, 1) & rotl(x, 8)) ^ rotl(x, 2));
    }
    return static_cast<Word>((x & rotl(x, 5)) ^ rotl(x, 1));
}

RoundKeys key_schedule(CipherId cipher, const MasterKey& mk, int rounds) {
    if (rounds < 1) throw std::invalid_argument("key_schedule: rounds must be >= 1");
    RoundKeys rk{cipher, {}};
    rk.keys.resize(static_cast<std::size_t>(std::max(rounds, 4)));
    std::copy(mk.words.begin(), mk.words.end(), rk.keys.begin());
    auto& k = rk.keys;
    for (int i = 4; i < rounds; ++i) {
        if (cipher == CipherId::Simon32_64) {
            Word tmp = static_cast<Word>(rotr(k[i - 1], 3) ^ k[i - 3]);
            tmp ^= rotr(tmp, 1);
            k[i] = static_cast<Word>(k[i - 4] ^ tmp ^ kConstC ^ simon_z(i - 4));
        } else {
            const Word c = static_cast<Word>(kConstC | simeck_z(i - 4));
            k[i] = static_cast<Word>(k[i - 4] ^ round_fn(cipher, k[i - 3]) ^ c);
        }
    }
    k.resize(static_cast<std::size_t>(rounds));
    return rk;
}

Block encrypt(CipherId cipher, Block pt, std::span<const Word> rk) noexcept {
    for (Word k : rk) pt = encrypt_round(cipher, pt, k);
    return pt;
}

Block decrypt(CipherId cipher, Block ct, std::span<const Word> rk) noexcept {
    for (auto it = rk.rbegin(); it != rk.rend(); ++it) ct = decrypt_round(cipher, ct, *it);
    return ct;
}

std::vector<Block> encrypt_trace(CipherId cipher, Block pt, std::span<const Word> rk) {
    std::vector<Block> states;
    states.reserve(rk.size() + 1);
    states.push_back(pt);
    for (Word k : rk) states.push_back(encrypt_round(cipher, states.back(), k));
    return states;
}

Block partial_decrypt_zero_key(CipherId cipher, Block ct, int rounds) {
    if (rounds != 1 && rounds != 2) {
        throw std::invalid_argument("partial_decrypt_zero_key: rounds must be 1 or 2");
    }
    for (int i = 0; i < rounds; ++i) ct = decrypt_round(cipher, ct, 0);
    return ct;
}

std::vector<Word> simon_rx_subkey_offsets(int lambda, int rounds) {
    // With K = K' = 0 the relation K' = K <<< lambda holds trivially, and the
    // offset is key-independent because the schedule is affine.
    const RoundKeys zero = key_schedule(CipherId::Simon32_64, MasterKey{}, rounds);
    std::vector<Word> out(zero.keys.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<Word>(zero.keys[i] ^ rotl(zero.keys[i], lambda));
    }
    return out;
}

}  // namespace rxnc
