"""Four concurrent blind Schnorr sessions, five valid signatures."""

from blindlab.blind_sig import SchnorrBlindSigner
from blindlab.classic_sig import schnorr_keygen, schnorr_verify
from blindlab.core_math import SeededRng, gen_schnorr_group
from blindlab.ros_attack import one_more_forgery

group = gen_schnorr_group(20, 64, SeededRng(3))
key = schnorr_keygen(group, SeededRng(4))
signer = SchnorrBlindSigner(key, SeededRng(5))

ell = 4
messages = [b"forged message %d" % i for i in range(ell + 1)]
batch = one_more_forgery(signer, ell, messages)

print(f"q = {group.q} ({group.q.bit_length()} bits), solver = {batch.solver}")
print(f"signer answered {batch.responses_consumed} sessions, oracle evaluations = {batch.oracle_evaluations}")
for f in batch.forgeries:
    print(f.message, "valid:", schnorr_verify(f.message, f.signature, key.public))
