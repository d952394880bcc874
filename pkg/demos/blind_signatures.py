"""Blind RSA and blind Schnorr, and why textbook RSA blinding is dangerous."""

from blindlab.blind_sig import (
    NaiveRsaOracle,
    SchnorrBlindSigner,
    blindness_witness_schnorr,
    rsa_fdh_blind_run,
    rsa_naive_decrypt_attack,
    rsa_naive_multiplicative_forgery,
    rsa_naive_verify,
    schnorr_blind_run,
    view_of,
)
from blindlab.classic_sig import rsa_keygen, schnorr_keygen, schnorr_verify
from blindlab.core_math import SeededRng, gen_schnorr_group

rng = SeededRng(2024)

# RSA full-domain-hash blinding: the signer sees a uniformly random unit,
# the user walks away with an ordinary RSA-FDH signature.
rsa = rsa_keygen(64, 65537, rng.spawn("rsa"))
out = rsa_fdh_blind_run(b"vote for option B", key=rsa, rng=rng)
print("rsa-fdh signature:", hex(out.signature))

# Without the hash the signer is a decryption oracle.
oracle = NaiveRsaOracle(rsa)
secret = 123456789
recovered = rsa_naive_decrypt_attack(pow(secret, rsa.e, rsa.n), rsa.public, oracle, rng)
print("decrypt attack recovered", recovered, "from queries", oracle.queries)

# ...and a forgery oracle: two queries, neither equal to the target.
oracle = NaiveRsaOracle(rsa)
target = 42
sig = rsa_naive_multiplicative_forgery(target, rsa.public, oracle, rng)
print("forged signature on 42 verifies:", rsa_naive_verify(target, sig, rsa.public), "queries:", oracle.queries)

# Blind Schnorr over a small prime-order group.
group = gen_schnorr_group(32, 128, rng.spawn("group"))
key = schnorr_keygen(group, rng.spawn("key"))
signer = SchnorrBlindSigner(key, rng.spawn("signer"))
outs = [schnorr_blind_run(b"coin %d" % i, signer=signer, rng=rng) for i in range(3)]
for o in outs:
    print(o.message, "verifies:", schnorr_verify(o.message, o.signature, key.public))

# Perfect blindness: every signer view is consistent with every signature,
# so the signer cannot tell which session produced which coin.
views = [view_of(t) for t in signer.ledger.transcripts]
table = [[blindness_witness_schnorr(v, (o.message, o.signature), key.public) for o in outs] for v in views]
print("view x signature consistency:", table)
