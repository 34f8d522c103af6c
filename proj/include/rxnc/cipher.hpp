#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rxnc {

using Word = std::uint16_t;

constexpr int kWordBits = 16;

constexpr Word rotl(Word x, int s) noexcept {
    s &= 15;
    return static_cast<Word>((x << s) | (x >> ((kWordBits - s) & 15)));
}

constexpr Word rotr(Word x, int s) noexcept { return rotl(x, kWordBits - (s & 15)); }

enum class CipherId : std::uint8_t { Simon32_64 = 0, Simeck32_64 = 1 };

std::string_view cipher_name(CipherId c);
/// Accepts "simon", "simon32_64", "simeck", "simeck32_64" (case-insensitive).
CipherId parse_cipher(std::string_view name);

/// A 32-bit Feistel state. Packed form is left || right, left in the high half.
struct Block {
    Word left = 0;
    Word right = 0;

    constexpr std::uint32_t pack() const noexcept {
        return (static_cast<std::uint32_t>(left) << 16) | right;
    }
    static constexpr Block unpack(std::uint32_t v) noexcept {
        return {static_cast<Word>(v >> 16), static_cast<Word>(v & 0xFFFF)};
    }
    friend constexpr bool operator==(const Block&, const Block&) = default;
};

/// Ciphertext (or plaintext) pair (x, x') of one RX pair.
struct BlockPair {
    Block first;
    Block second;
    friend constexpr bool operator==(const BlockPair&, const BlockPair&) = default;
};

/// Four 16-bit master-key words, stored in schedule order: words[0] is the
/// first round key (k0) and words[3] the fourth (k3). The design documents
/// print keys as k3 k2 k1 k0; use from_printed() for that order.
struct MasterKey {
    std::array<Word, 4> words{};

    static constexpr MasterKey from_printed(Word k3, Word k2, Word k1, Word k0) noexcept {
        return MasterKey{{k0, k1, k2, k3}};
    }
    friend constexpr bool operator==(const MasterKey&, const MasterKey&) = default;
};

struct RoundKeys {
    CipherId cipher = CipherId::Simon32_64;
    std::vector<Word> keys;

    std::size_t rounds() const noexcept { return keys.size(); }
};

Word round_fn(CipherId cipher, Word x) noexcept;

/// First `rounds` subkeys. Throws std::invalid_argument for rounds == 0.
RoundKeys key_schedule(CipherId cipher, const MasterKey& mk, int rounds);

/// One Feistel round: (L, R) -> (R ^ f(L) ^ k, L).
inline Block encrypt_round(CipherId cipher, Block s, Word k) noexcept {
    return {static_cast<Word>(s.right ^ round_fn(cipher, s.left) ^ k), s.left};
}

/// Inverse round: (L', R') -> (R', L' ^ f(R') ^ k).
inline Block decrypt_round(CipherId cipher, Block s, Word k) noexcept {
    return {s.right, static_cast<Word>(s.left ^ round_fn(cipher, s.right) ^ k)};
}

/// Applies every subkey in `rk` in order; an empty key list is the identity.
Block encrypt(CipherId cipher, Block pt, std::span<const Word> rk) noexcept;
inline Block encrypt(CipherId cipher, Block pt, const RoundKeys& rk) noexcept {
    return encrypt(cipher, pt, std::span<const Word>(rk.keys));
}

/// Applies subkeys in reverse order; exact inverse of encrypt().
Block decrypt(CipherId cipher, Block ct, std::span<const Word> rk) noexcept;
inline Block decrypt(CipherId cipher, Block ct, const RoundKeys& rk) noexcept {
    return decrypt(cipher, ct, std::span<const Word>(rk.keys));
}

/// Records every intermediate state: states[i] is the state after i rounds,
/// so states.front() == pt and states.back() == the ciphertext.
std::vector<Block> encrypt_trace(CipherId cipher, Block pt, std::span<const Word> rk);

/// Inverse rounds with an all-zero subkey. rounds must be 1 or 2.
Block partial_decrypt_zero_key(CipherId cipher, Block ct, int rounds);

/// Simon's key schedule is affine, so for K' = K <<< lambda the related round
/// keys satisfy rk'_i = (rk_i <<< lambda) ^ offset_i for a key-independent
/// offset. Returns offset_i for i in [0, rounds). Simeck has no such offset.
std::vector<Word> simon_rx_subkey_offsets(int lambda, int rounds);

}  // namespace rxnc
