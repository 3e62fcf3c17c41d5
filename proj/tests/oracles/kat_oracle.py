"""Independent reference routines used to freeze the known-answer vectors.

TEA and XTEA are transcriptions of the published reference C routines;
AES-128 goes through the `cryptography` package. Output lines use the KAT
file format: cipher_id,rounds,key_hex,plaintext_hex,ciphertext_hex
"""
import random

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

M32 = 0xFFFFFFFF


def tea(key, block, cycles=32):
    v0, v1 = block >> 32, block & M32
    k = [(key >> (96 - 32 * i)) & M32 for i in range(4)]
    s, delta = 0, 0x9E3779B9
    for _ in range(cycles):
        s = (s + delta) & M32
        v0 = (v0 + ((((v1 << 4) + k[0]) & M32) ^ ((v1 + s) & M32) ^ (((v1 >> 5) + k[1]) & M32))) & M32
        v1 = (v1 + ((((v0 << 4) + k[2]) & M32) ^ ((v0 + s) & M32) ^ (((v0 >> 5) + k[3]) & M32))) & M32
    return (v0 << 32) | v1


def xtea(key, block, cycles=32):
    v0, v1 = block >> 32, block & M32
    k = [(key >> (96 - 32 * i)) & M32 for i in range(4)]
    s, delta = 0, 0x9E3779B9
    for _ in range(cycles):
        v0 = (v0 + (((((v1 << 4) & M32) ^ (v1 >> 5)) + v1) & M32 ^ ((s + k[s & 3]) & M32))) & M32
        s = (s + delta) & M32
        v1 = (v1 + (((((v0 << 4) & M32) ^ (v0 >> 5)) + v0) & M32 ^ ((s + k[(s >> 11) & 3]) & M32))) & M32
    return (v0 << 32) | v1


def aes(key, block):
    enc = Cipher(algorithms.AES(key.to_bytes(16, "big")), modes.ECB()).encryptor()
    out = enc.update(block.to_bytes(16, "big")) + enc.finalize()
    return int.from_bytes(out, "big")


def main():
    rng = random.Random(20160101)
    rows = []
    fixed = [
        ("tea", 32, 0, 0),
        ("xtea", 32, 0x000102030405060708090A0B0C0D0E0F, 0x4142434445464748),
        ("aes128", 10, 0x2B7E151628AED2A6ABF7158809CF4F3C, 0x3243F6A8885A308D313198A2E0370734),
        ("aes128", 10, 0x000102030405060708090A0B0C0D0E0F, 0x00112233445566778899AABBCCDDEEFF),
    ]
    for name, rounds, key, pt in fixed:
        rows.append((name, rounds, key, pt))
    for name, rounds, bits in (("tea", 32, 64), ("xtea", 32, 64), ("aes128", 10, 128), ("tea", 8, 64), ("xtea", 16, 64)):
        for _ in range(3):
            rows.append((name, rounds, rng.getrandbits(128), rng.getrandbits(bits)))
    for name, rounds, key, pt in rows:
        if name == "tea":
            ct, w = tea(key, pt, rounds), 16
        elif name == "xtea":
            ct, w = xtea(key, pt, rounds), 16
        else:
            ct, w = aes(key, pt), 32
        print(f"{name},{rounds},{key:032x},{pt:0{w}x},{ct:0{w}x}")


if __name__ == "__main__":
    main()
