"""Fiat-Shamir with aborts: how often the signer restarts, and why."""

from blindlab.core_math import SeededRng
from blindlab.fs_sig import FsParams, fs_keygen, fs_sign_detailed, fs_verify

params = FsParams()
key = fs_keygen(params, SeededRng(8))
rng = SeededRng(9)

total = None
for i in range(200):
    res = fs_sign_detailed(b"message %d" % i, key, rng)
    assert fs_verify(b"message %d" % i, res.signature, key.public)
    if total is None:
        total = res.stats
    else:
        total.merge(res.stats)

print("params:", params)
print(f"attempts={total.attempts} z_rejections={total.z_rejections} "
      f"low_rejections={total.low_rejections} high_disagreements={total.high_disagreements}")
print("high failure rate %.4f" % total.high_failure_rate())
print("largest |z| entry in the last signature:", max(abs(v) for v in res.signature.z), "bound", params.z_bound)
