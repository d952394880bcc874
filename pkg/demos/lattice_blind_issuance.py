"""One test-mode lattice blind issuance, with the witness revealed."""

from blindlab.core_math import SeededRng
from blindlab.pbs_lattice import PbsParams, run_session, transparent_verify, transparent_verify_partial

params = PbsParams(d=8, q=97, k=2)
session = run_session(b"hello", params, SeededRng(10))
print("gadget base", params.gadget_base, "norm bound %.2f" % params.norm_bound())
print("witness e =", session.e)
print("bundle verifies:", transparent_verify(session.bundle, session.keys.u))

gamma = b"value:5|expiry:2026-12-31"
partial = run_session(b"hello", params, SeededRng(11), gamma=gamma)
print("partial, right info:", transparent_verify_partial(partial.bundle, partial.keys.u, gamma))
print("partial, wrong info:", transparent_verify_partial(partial.bundle, partial.keys.u, b"value:6"))
