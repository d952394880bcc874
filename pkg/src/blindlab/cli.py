"""Command-line entry point.  Results go to stdout as key=value records,
diagnostics to stderr.  Exit codes: 0 success, 1 verification or attack
failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path

from blindlab import textfmt
from blindlab.core_math import SeededRng, gen_schnorr_group

USAGE, FAILED, OK = 2, 1, 0

TIERS = {
    # name: (rsa bits per prime, schnorr q bits, schnorr p bits)
    "toy": (64, 32, 128),
    "real": (1024, 256, 2048),
}


class UsageError(Exception):
    pass


def _out(**fields) -> None:
    print(textfmt.record(**fields))


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _write(path: str, text: str) -> None:
    Path(path).write_text(text)


def _msg(args) -> bytes:
    return args.msg.encode()


# ------------------------------------------------------------ classic sigs


def cmd_keygen(args) -> int:
    from blindlab.classic_sig import dsa_keygen, dump_key, rsa_keygen, schnorr_keygen

    rng = SeededRng(args.seed)
    rsa_bits, q_bits, p_bits = TIERS[args.tier]
    if args.scheme == "rsa":
        key = rsa_keygen(args.bits or rsa_bits, rng=rng)
        _out(scheme="rsa", n_bits=key.n.bit_length(), e=key.e)
    else:
        grp = gen_schnorr_group(q_bits, args.bits or p_bits, rng.spawn("group"))
        key = (dsa_keygen if args.scheme == "dsa" else schnorr_keygen)(grp, rng)
        _out(scheme=args.scheme, p_bits=grp.p.bit_length(), q_bits=grp.q.bit_length())
    _write(args.out, dump_key(key, include_secret=True))
    if args.pub_out:
        _write(args.pub_out, dump_key(key.public))
    return OK


def _sig_record(sig) -> dict:
    from blindlab.classic_sig import DsaSignature, SchnorrSignature

    if isinstance(sig, DsaSignature):
        return {"scheme": "dsa", "r": sig.r, "s": sig.s}
    if isinstance(sig, SchnorrSignature):
        return {"scheme": "schnorr", "R": sig.R, "s": sig.s}
    return {"scheme": "rsa", "s": sig}


def cmd_sign(args) -> int:
    from blindlab import classic_sig as cs

    key = cs.load_key(_read(args.key))
    rng = SeededRng(args.seed)
    if isinstance(key, cs.RsaKeyPair):
        sig = cs.rsa_sign(_msg(args), key)
    elif isinstance(key, cs.DsaKeyPair):
        sig = cs.dsa_sign(_msg(args), key, rng)
    elif isinstance(key, cs.SchnorrKeyPair):
        sig = cs.schnorr_sign(_msg(args), key, rng)
    else:
        raise UsageError("signing needs a key file with the secret part")
    line = textfmt.record(**_sig_record(sig))
    print(line)
    if args.out:
        _write(args.out, line + "\n")
    return OK


def cmd_verify(args) -> int:
    from blindlab import classic_sig as cs

    key = cs.load_key(_read(args.key))
    public = getattr(key, "public", key)
    rec = textfmt.parse_record(_read(args.sig).strip())
    try:
        if isinstance(public, cs.RsaPublicKey):
            ok = cs.rsa_verify(_msg(args), int(rec["s"]), public)
        elif isinstance(public, cs.DsaPublicKey):
            ok = cs.dsa_verify(_msg(args), cs.DsaSignature(int(rec["r"]), int(rec["s"])), public)
        else:
            ok = cs.schnorr_verify(_msg(args), cs.SchnorrSignature(int(rec["R"]), int(rec["s"])), public)
    except (KeyError, ValueError):
        raise UsageError("signature file does not match the key type") from None
    _out(valid=ok)
    return OK if ok else FAILED


# ------------------------------------------------------------ blind demos


def cmd_blind_demo(args) -> int:
    from blindlab import blind_sig as bs
    from blindlab.classic_sig import rsa_keygen, rsa_verify, schnorr_keygen, schnorr_verify

    rng = SeededRng(args.seed)
    rsa_bits, q_bits, p_bits = TIERS[args.tier]
    m = _msg(args)
    if args.scheme == "rsa":
        key = rsa_keygen(rsa_bits, rng=rng.spawn("key"))
        signer = bs.RsaBlindSigner(key)
        out = bs.rsa_fdh_blind_run(m, rng=rng, signer=signer)
        view = tuple(msg.payload for msg in signer.ledger.transcripts[-1].messages)
        ok = rsa_verify(m, out.signature, key.public)
        linked = bs.blindness_witness_rsa(view, (m, out.signature), key.public)
        _out(scheme="rsa-fdh", blinded=view[0], signed=view[1])
        _out(signature=out.signature, valid=ok, view_links_to_signature=linked)
    else:
        grp = gen_schnorr_group(q_bits, p_bits, rng.spawn("group"))
        key = schnorr_keygen(grp, rng.spawn("key"))
        signer = bs.SchnorrBlindSigner(key, rng.spawn("signer"))
        sig = bs.schnorr_blind_run(m, key, rng, signer=signer).signature
        R, c, s = bs.view_of(signer.ledger.transcripts[-1])
        ok = schnorr_verify(m, sig, key.public)
        linked = bs.blindness_witness_schnorr((R, c, s), (m, sig), key.public)
        _out(scheme="schnorr", R=R, c=c, s=s)
        _out(R_prime=sig.R, s_prime=sig.s, valid=ok, view_links_to_signature=linked)
    return OK if ok and linked else FAILED


def cmd_ros_attack(args) -> int:
    from blindlab.blind_sig import SchnorrBlindSigner
    from blindlab.classic_sig import schnorr_keygen, schnorr_verify
    from blindlab.ros_attack import AttackFailed, one_more_forgery

    rng = SeededRng(args.seed)
    grp = gen_schnorr_group(args.qbits, max(args.pbits, args.qbits + 16), rng.spawn("group"))
    key = schnorr_keygen(grp, rng.spawn("key"))
    signer = SchnorrBlindSigner(key, rng.spawn("signer"))
    messages = [f"forged message {i}".encode() for i in range(args.sessions + 1)]
    _out(q=grp.q, q_bits=grp.q.bit_length(), sessions=args.sessions, solver=args.solver)
    try:
        batch = one_more_forgery(signer, args.sessions, messages, solver=args.solver)
    except AttackFailed as exc:
        print(f"attack failed: {exc}", file=sys.stderr)
        _out(forgeries=0, verified=0)
        return FAILED
    verified = 0
    for f in batch.forgeries:
        ok = schnorr_verify(f.message, f.signature, key.public)
        verified += ok
        _out(message=f.message.decode().replace(" ", "_"), R=f.R, s=f.z, valid=ok)
    _out(oracle_evaluations=batch.oracle_evaluations, responses=batch.responses_consumed)
    print(f"elapsed {batch.seconds:.3f}s", file=sys.stderr)
    _out(forgeries=len(batch.forgeries), verified=verified)
    return OK if verified == args.sessions + 1 and batch.responses_consumed == args.sessions else FAILED


# ------------------------------------------------------------ lattices


def cmd_lll(args) -> int:
    from blindlab.lattice import dump_basis, is_lll_reduced, is_unimodular_transform, lll_reduce, load_basis

    basis = load_basis(_read(args.inp))
    try:
        delta = Fraction(args.delta)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"bad delta {args.delta!r}") from None
    res = lll_reduce(basis, delta)
    check = is_lll_reduced(res.basis, delta)
    text = dump_basis(res.basis)
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    _out(lll_reduced=check.ok, unimodular=is_unimodular_transform(res.transform, basis, res.basis), swaps=res.swaps, delta=delta)
    return OK if check.ok else FAILED


def cmd_svp(args) -> int:
    from blindlab.lattice import BudgetError, load_basis, svp_bruteforce

    basis = load_basis(_read(args.inp))
    try:
        res = svp_bruteforce(basis, args.bound)
    except BudgetError as exc:
        raise UsageError(str(exc)) from None
    _out(vector=list(res.vector), norm_sq=res.norm_sq, coefficients=list(res.coefficients), exact=res.exact)
    return OK


def cmd_sis_gen(args) -> int:
    from blindlab.lattice import sis_check, sis_gen

    try:
        inst, x = sis_gen(args.n, args.m, args.q, args.B, SeededRng(args.seed))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    text = textfmt.dump_rows("sis-instance v1", [[inst.n, inst.m, inst.q]] + inst.A)
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    _out(n=inst.n, m=inst.m, q=inst.q, B=args.B, witness=x, check=sis_check(inst, x))
    return OK


# ------------------------------------------------------------ lattice sigs


def cmd_fs_sign(args) -> int:
    from blindlab.fs_sig import FsKeyPair, FsParams, dump_fs_key, dump_fs_sig, fs_keygen, fs_sign_detailed, load_fs_key

    rng = SeededRng(args.seed)
    if args.key:
        key = load_fs_key(_read(args.key))
        if not isinstance(key, FsKeyPair):
            raise UsageError("signing needs a key file with the secret part")
    else:
        key = fs_keygen(FsParams(), rng.spawn("key"))
    if args.write_key:
        _write(args.write_key, dump_fs_key(key, include_secret=True))
    if args.write_pub:
        _write(args.write_pub, dump_fs_key(key.public))
    res = fs_sign_detailed(_msg(args), key, rng)
    text = dump_fs_sig(res.signature)
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    _out(attempts=res.stats.attempts, z_inf=max(abs(v) for v in res.signature.z), z_bound=key.params.z_bound)
    return OK


def cmd_fs_verify(args) -> int:
    from blindlab.fs_sig import fs_verify, load_fs_key, load_fs_sig

    key = load_fs_key(_read(args.key))
    sig = load_fs_sig(_read(args.sig))
    ok = fs_verify(_msg(args), sig, key)
    _out(valid=ok)
    return OK if ok else FAILED


def cmd_pbs_demo(args) -> int:
    from blindlab import pbs_lattice as pbs

    params = pbs.PbsParams(d=args.d, q=args.q, k=args.k)
    rng = SeededRng(args.seed)
    gamma = args.gamma.encode() if args.gamma is not None else None
    s = pbs.run_session(_msg(args), params, rng, gamma=gamma)
    lhs5 = pbs.group_direction_lhs(s.e, s.keys, s.I, params)
    rhs5 = pbs.group_direction_rhs(s.e, s.com, s.R, s.keys, s.ck, params)
    if gamma is None:
        ok = pbs.transparent_verify(s.bundle, s.keys.u)
    else:
        ok = pbs.transparent_verify_partial(s.bundle, s.keys.u, gamma)
    _out(d=params.d, q=params.q, k=params.k, gadget_base=params.gadget_base)
    _out(
        opens=pbs.bdlop_open_check(s.com, s.I, s.R, s.ck, params),
        expansion=pbs.expansion_identity(s.e, s.com, s.R, s.I, s.keys, s.ck, params),
        group_direction=lhs5 == rhs5,
    )
    _out(witness_norm=round(s.bundle.witness_norm(), 3), norm_bound=round(s.bundle.norm_bound, 3), verified=ok)
    if args.out:
        _write(args.out, pbs.dump_bundle(s.bundle))
    return OK if ok and lhs5 == rhs5 else FAILED


def cmd_ecash_run(args) -> int:
    from blindlab.ecash import ScenarioError, bundled_script, run_scenario

    path = Path(args.script)
    if path.is_file():
        script = path.read_text()
    else:
        try:
            script = bundled_script(path.name)
        except ScenarioError as exc:
            raise UsageError(str(exc)) from None
    try:
        res = run_scenario(script, args.seed)
    except ScenarioError as exc:
        raise UsageError(str(exc)) from None
    sys.stdout.write(res.trace_text)
    sys.stdout.write(res.ledgers)
    _out(assertions=len(res.assertions), passed=sum(p for _, p, _ in res.assertions), ok=res.ok)
    if args.trace_out:
        _write(args.trace_out, res.trace_text)
    return OK if res.ok else FAILED


# ------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")

    parser = argparse.ArgumentParser(prog="blindlab", description="Blind signatures, lattice tools and an eCash simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, parents=[common], help=help_, description=help_)
        p.set_defaults(func=func)
        return p

    p = add("keygen", cmd_keygen, "generate an RSA, DSA or Schnorr key file")
    p.add_argument("--scheme", choices=["rsa", "dsa", "schnorr"], required=True)
    p.add_argument("--bits", type=int, help="RSA bits per prime, or p bits for DSA/Schnorr")
    p.add_argument("--tier", choices=sorted(TIERS), default="toy")
    p.add_argument("--out", required=True, help="key file including the secret")
    p.add_argument("--pub-out", help="optional public key file")

    p = add("sign", cmd_sign, "sign a message with a key file")
    p.add_argument("--key", required=True)
    p.add_argument("--msg", required=True)
    p.add_argument("--out", help="write the signature record here")

    p = add("verify", cmd_verify, "verify a signature record")
    p.add_argument("--key", required=True)
    p.add_argument("--msg", required=True)
    p.add_argument("--sig", required=True, help="file holding the record printed by sign")

    p = add("blind-demo", cmd_blind_demo, "run one blind signing session and link it")
    p.add_argument("--scheme", choices=["rsa", "schnorr"], default="schnorr")
    p.add_argument("--msg", default="hello")
    p.add_argument("--tier", choices=sorted(TIERS), default="toy")

    p = add("ros-attack", cmd_ros_attack, "forge sessions+1 blind Schnorr signatures from sessions responses")
    p.add_argument("--sessions", type=int, default=4)
    p.add_argument("--qbits", type=int, default=20)
    p.add_argument("--pbits", type=int, default=64)
    p.add_argument("--solver", choices=["klist", "bruteforce"], default="klist")

    p = add("lll", cmd_lll, "LLL-reduce a lattice-basis file")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--delta", default="3/4")
    p.add_argument("--out", help="reduced basis file (stdout if omitted)")

    p = add("svp", cmd_svp, "brute-force shortest vector of a lattice-basis file")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--bound", type=int, help="coefficient box; default is a provable bound")

    p = add("sis-gen", cmd_sis_gen, "SIS instance with a planted short witness")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--q", type=int, default=7)
    p.add_argument("--B", type=float, default=2.0)
    p.add_argument("--out")

    p = add("fs-sign", cmd_fs_sign, "Fiat-Shamir-with-aborts signature")
    p.add_argument("--msg", required=True)
    p.add_argument("--key", help="fs-key file with secrets; generated from the seed if omitted")
    p.add_argument("--write-key", help="save the signing key")
    p.add_argument("--write-pub", help="save the public key")
    p.add_argument("--out", help="signature file (stdout if omitted)")

    p = add("fs-verify", cmd_fs_verify, "verify a Fiat-Shamir-with-aborts signature")
    p.add_argument("--msg", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--sig", required=True)

    p = add("pbs-demo", cmd_pbs_demo, "one test-mode lattice blind issuance with revealed witness")
    p.add_argument("--msg", default="hello")
    p.add_argument("--gamma", help="common message for the partially blind variant")
    p.add_argument("--d", type=int, default=8)
    p.add_argument("--q", type=int, default=97)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--out", help="write the pbs-bundle file")

    p = add("ecash-run", cmd_ecash_run, "run an eCash scenario script")
    p.add_argument("--script", required=True, help="path, or the name of a bundled scenario")
    p.add_argument("--trace-out")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError) as exc:  # FormatError and bad parameters included
        print(f"error: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
