"""Command-line interface.

Exit codes: 0 success, 1 protocol/authentication error, 2 usage error
(argparse's default), 3 attack timed out with a censored bound.
Machine-readable output (JSON lines, CSV) goes to stdout; logs and
progress go to stderr.  Binary payloads cross stdin/stdout.
"""

from __future__ import annotations

import argparse
import json
import os
import socket
import sys

from . import acorn, costmodel
from .cstn import (
    NetworkKind, Topology, Trn, apply_forward, apply_inverse,
    build_topology, permutation_coverage,
)
from .health import HealthMonitor
from .protocol import (
    ProtocolError, Role, Session, SessionAborted, SessionConfig,
)
from .rng import OsEntropySource, TriviumPrng, reseed
from .sbox import KHAZAD_SBOX, substitute_bytes

KEY_ENV = "TOGGLENET_KEY"

EXIT_OK = 0
EXIT_PROTOCOL = 1
EXIT_USAGE = 2
EXIT_CENSORED = 3


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _emit(obj: dict) -> None:
    print(json.dumps(obj))


def _usage(msg: str) -> "SystemExit":
    _log(f"usage error: {msg}")
    return SystemExit(EXIT_USAGE)


def _add_net_flags(p: argparse.ArgumentParser, default_n=64, default_kind="log", default_m=None):
    p.add_argument("--kind", choices=["omega", "log"], default=default_kind)
    p.add_argument("--n", type=int, default=default_n, help="block width in bits")
    p.add_argument("--m", type=int, default=default_m,
                   help="extra stages (log kind; default log2(n)-2)")


def _topology(args) -> Topology:
    kind = NetworkKind(args.kind)
    if kind is NetworkKind.OMEGA:
        m = args.m if args.m is not None else 0
    else:
        m = args.m if args.m is not None else (args.n.bit_length() - 1) - 2
    return build_topology(args.n, kind, m)


def _seeded_prng(seed: int | None) -> TriviumPrng:
    if seed is None:
        return reseed(OsEntropySource())
    return TriviumPrng(seed.to_bytes(16, "big"))


def _parse_key(args) -> bytes:
    text = args.key or os.environ.get(KEY_ENV)
    if not text:
        raise _usage(f"a 32-hex-digit key is required (--key or ${KEY_ENV})")
    key = bytes.fromhex(text)
    if len(key) != acorn.KEY_BYTES:
        raise _usage(f"key must be {acorn.KEY_BYTES} bytes of hex")
    return key


# ------------------------------------------------------------------ net

def cmd_net(args) -> int:
    topo = _topology(args)
    info = {
        "n": topo.n, "kind": topo.kind.value, "m": topo.m,
        "stages": topo.stages, "switches_per_stage": topo.switches_per_stage,
        "switch_count": topo.switch_count, "selector_count": topo.selector_count,
        "trn_bytes": topo.trn_bytes,
    }
    if args.coverage:
        info["coverage_mode"] = args.coverage
        info["coverage"] = permutation_coverage(
            topo, args.coverage, budget=args.budget, seed=args.seed
        )
    _emit(info)
    return EXIT_OK


# -------------------------------------------------------- encode / decode

def _load_trn(args, topo: Topology) -> Trn:
    if args.trn_file:
        with open(args.trn_file) as f:
            obj = json.load(f)
        file_topo = build_topology(int(obj["n"]), NetworkKind(obj["kind"]), int(obj["m"]))
        if file_topo != topo:
            raise _usage("configuration file was made for a different network")
        return Trn.from_hex(obj["trn"], topo)
    if args.trn:
        return Trn.from_hex(args.trn, topo)
    if args.seed is not None:
        prng = _seeded_prng(args.seed)
        trn = Trn.from_bytes(prng.draw(0x54, topo.trn_bytes), topo)
        if args.trn_out:
            with open(args.trn_out, "w") as f:
                json.dump({"n": topo.n, "kind": topo.kind.value,
                           "m": topo.m, "trn": trn.to_hex()}, f)
            _log(f"configuration written to {args.trn_out}")
        return trn
    raise _usage("need --trn, --trn-file, or --seed")


def _run_codec(args, decode: bool) -> int:
    topo = _topology(args)
    trn = _load_trn(args, topo)
    data = sys.stdin.buffer.read()
    bs = topo.n // 8
    if len(data) % bs:
        raise _usage(f"input length must be a multiple of {bs} bytes")
    out = bytearray()
    from ._bits import bits_to_bytes, bytes_to_bits
    for off in range(0, len(data), bs):
        block = data[off:off + bs]
        if decode:
            y = bytes_to_bits(substitute_bytes(block), topo.n)
            out += bits_to_bytes(apply_inverse(topo, trn, y), topo.n)
        else:
            y = apply_forward(topo, trn, bytes_to_bits(block, topo.n))
            out += substitute_bytes(bits_to_bytes(y, topo.n))
    sys.stdout.buffer.write(bytes(out))
    sys.stdout.buffer.flush()
    return EXIT_OK


def cmd_encode(args) -> int:
    return _run_codec(args, decode=False)


def cmd_decode(args) -> int:
    return _run_codec(args, decode=True)


# --------------------------------------------------------------- session

def _open_socket(args) -> socket.socket:
    if args.listen:
        host, port = args.listen.rsplit(":", 1)
        srv = socket.create_server((host or "127.0.0.1", int(port)))
        _log(f"listening on {args.listen}")
        conn, peer = srv.accept()
        srv.close()
        _log(f"peer connected from {peer}")
        return conn
    host, port = args.connect.rsplit(":", 1)
    return socket.create_connection((host, int(port)))


def cmd_session(args) -> int:
    key = _parse_key(args)
    cfg = SessionConfig(key=key, n=args.n, kind=NetworkKind(args.kind),
                        m=args.m if args.m is not None else (args.n.bit_length() - 1) - 2,
                        t_blocks=args.t)
    sock = _open_socket(args)
    try:
        if args.mode == "send":
            session = Session(cfg, Role.INITIATOR, _seeded_prng(args.seed))
            bs = cfg.i_payload_len
            sent = 0
            while True:
                chunk = sys.stdin.buffer.read(bs * 4096)
                if not chunk:
                    break
                if len(chunk) % bs:
                    pad = bs - len(chunk) % bs
                    chunk += b"\x00" * pad
                    _log(f"padded final block with {pad} zero bytes")
                sock.sendall(session.send(chunk))
                sent += len(chunk)
            sock.shutdown(socket.SHUT_WR)
            _log(json.dumps({"sent_bytes": sent, "rekeys": session.tx.rekey_count,
                             "blocks": session.tx.block_count}))
        else:
            session = Session(cfg, Role.RESPONDER, _seeded_prng(args.seed))
            received = 0
            while True:
                chunk = sock.recv(65536)
                if not chunk:
                    break
                plain = session.receive(chunk)
                received += len(plain)
                sys.stdout.buffer.write(plain)
            sys.stdout.buffer.flush()
            _log(json.dumps({"received_bytes": received, "rekeys": session.rx.rekey_count,
                             "blocks": session.rx.block_count}))
    except (acorn.AuthenticationError, ProtocolError, SessionAborted) as exc:
        _log(f"session error: {exc}")
        return EXIT_PROTOCOL
    finally:
        sock.close()
    return EXIT_OK


# ---------------------------------------------------------------- attack

def _attack_trial(payload):
    """Worker for parallel trials (must stay picklable)."""
    from .cstn import build_topology as bt
    from . import satattack as sa

    (n, kind, m, timeout, solver, seed, include_sbox) = payload
    topo = bt(n, NetworkKind(kind), m)
    import random as _r
    hidden = Trn(_r.Random(seed).getrandbits(topo.selector_count), topo.selector_count)
    if timeout is not None:
        trace = sa.attack_with_deadline(topo, hidden, timeout, solver, include_sbox)
    else:
        trace = sa.attack(topo, sa.make_oracle(topo, hidden, include_sbox),
                          solver=solver, include_sbox=include_sbox)
    return trace.report()


def cmd_attack(args) -> int:
    from . import satattack as sa

    topo = _topology(args)
    if args.dimacs:
        with open(args.dimacs, "w") as f:
            f.write(sa.KeyedCircuit.encode(topo, include_sbox=args.with_sbox).to_dimacs())
        _log(f"CNF written to {args.dimacs}")
        if args.trials == 0:
            return EXIT_OK
    solver = args.solver or sa.DEFAULT_SOLVER
    payloads = [
        (args.n, args.kind, topo.m, args.timeout, solver,
         args.seed + i, args.with_sbox)
        for i in range(max(args.trials, 1))
    ]
    if len(payloads) > 1 and args.workers != 1:
        from concurrent.futures import ProcessPoolExecutor

        workers = args.workers or min(len(payloads), os.cpu_count() or 1)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_attack_trial, payloads))
    else:
        reports = [_attack_trial(p) for p in payloads]
    for rep in reports:
        _emit(rep)
    censored = all(r["censored"] for r in reports)
    summary = {
        "size": topo.n, "kind": topo.kind.value, "m": topo.m,
        "trials": len(reports),
        "n_estimate": max(r["iterations"] for r in reports),
        "censored": censored,
    }
    _emit(summary)
    if args.report:
        with open(args.report, "w") as f:
            for rep in reports + [summary]:
                f.write(json.dumps(rep) + "\n")
    if args.fig:
        from .plotting import plot_attack_report

        plot_attack_report(reports, args.fig)
        _log(f"figure written to {args.fig}")
    return EXIT_CENSORED if censored else EXIT_OK


# ------------------------------------------------------------------ cost

def cmd_cost(args) -> int:
    topo = _topology(args)
    cipher = costmodel.load_cipher(args.cipher)
    channel = costmodel.load_channel(args.cipher)
    sizes = [int(s) for s in args.sizes.split(",")]
    result = costmodel.sweep(cipher, channel, topo, args.t, sizes,
                             include_init=args.include_init,
                             accounting=args.accounting)
    csv_text = result.to_csv()
    if args.csv:
        with open(args.csv, "w") as f:
            f.write(csv_text)
        _emit({"crossover_bytes": result.crossover_bytes,
               "accounting": args.accounting, "csv": args.csv})
    else:
        sys.stdout.write(csv_text)
        _log(json.dumps({"crossover_bytes": result.crossover_bytes,
                         "accounting": args.accounting}))
    if args.fig:
        from .plotting import plot_sweep

        plot_sweep(result, args.fig,
                   title=f"{args.cipher} vs re-keyed channel ({args.accounting})")
        _log(f"figure written to {args.fig}")
    return EXIT_OK


# --------------------------------------------------------------- rngtest

def cmd_rngtest(args) -> int:
    data = open(args.infile, "rb").read() if args.infile else sys.stdin.buffer.read()
    mon = HealthMonitor(h=args.entropy, window=args.window)
    alarms = {"rct": 0, "apt": 0}
    first_alarm = None
    bit_index = 0
    for byte in data:
        for t in range(7, -1, -1):
            mon.step((byte >> t) & 1)
            if mon.alarm:
                alarms[mon.alarm] += 1
                if first_alarm is None:
                    first_alarm = bit_index
                mon.reset()
            bit_index += 1
    _emit({
        "bits": bit_index, "h": args.entropy,
        "rct_cutoff": mon.c_rct, "apt_cutoff": mon.c_apt,
        "rct_alarms": alarms["rct"], "apt_alarms": alarms["apt"],
        "first_alarm_bit": first_alarm,
        "verdict": "alarm" if (alarms["rct"] or alarms["apt"]) else "ok",
    })
    return EXIT_OK


# -------------------------------------------------------------- selftest

def cmd_selftest(args) -> int:
    import random

    from . import satattack as sa
    from . import sbox as sboxmod
    from .cstn import extract_affine, mirror, reverse_trn
    from .health import apt_cutoff, rct_cutoff
    from .trivium import Trivium

    failures = 0

    def check(name, fn):
        nonlocal failures
        try:
            fn()
            print(f"ok   {name}")
        except Exception as exc:
            failures += 1
            print(f"FAIL {name}: {exc}")

    rnd = random.Random(0xC0FFEE)

    def sbox_checks():
        t = sboxmod.KHAZAD_SBOX
        assert sorted(t) == list(range(256)), "not a permutation"
        assert all(t[t[x]] == x for x in range(256)), "not an involution"
        assert sboxmod.generate_table() == t, "mini-box regeneration mismatch"
        assert sboxmod.table_checksum() == sboxmod.KHAZAD_SBOX_SHA256

    def cstn_checks():
        topo = build_topology(4, "omega", 0)
        for tb in range(1 << 12):
            trn = Trn(tb, 12)
            for x in range(16):
                assert apply_inverse(topo, trn, apply_forward(topo, trn, x)) == x
        big = build_topology(64, "log", 4)
        for _ in range(200):
            trn = Trn(rnd.getrandbits(960), 960)
            x = rnd.getrandbits(64)
            assert apply_inverse(big, trn, apply_forward(big, trn, x)) == x

    def mirror_checks():
        topo = build_topology(8, "omega", 0)
        mt = mirror(topo)
        for _ in range(300):
            trn = Trn(rnd.getrandbits(36), 36)
            rt = reverse_trn(topo, trn)
            x = rnd.getrandbits(8)
            assert apply_forward(mt, rt, apply_forward(topo, trn, x)) == x

    def affine_checks():
        topo = build_topology(8, "omega", 0)
        trn = Trn(rnd.getrandbits(36), 36)
        am = extract_affine(topo, trn)
        assert all(am.apply(x) == apply_forward(topo, trn, x) for x in range(256))

    def aead_checks():
        key, npub = bytes(16), bytes(range(16))
        pt = bytes(rnd.randrange(256) for _ in range(120))
        ct, tag = acorn.seal(key, npub, b"\x80", pt)
        assert acorn.open_(key, npub, b"\x80", ct, tag) == pt
        bad = bytearray(tag)
        bad[0] ^= 1
        try:
            acorn.open_(key, npub, b"\x80", ct, bytes(bad))
            raise AssertionError("tampered tag accepted")
        except acorn.AuthenticationError:
            pass

    def trivium_checks():
        k, iv = bytes(10), bytes(range(10))
        assert Trivium.warmed_up(k, iv).keystream(64) == Trivium.warmed_up(k, iv).keystream(64)
        t = Trivium(k, iv)
        try:
            t.keystream(1)
            raise AssertionError("keystream before warm-up")
        except Exception:
            pass

    def health_checks():
        assert rct_cutoff(1.0) == 21
        assert rct_cutoff(0.5) == 41
        c = apt_cutoff(1.0)
        assert 512 < c < 1024, c

    def attack_checks():
        topo = build_topology(4, "omega", 0)
        hidden = Trn(rnd.getrandbits(12), 12)
        trace = sa.attack(topo, sa.make_oracle(topo, hidden))
        assert trace.equivalent, "recovered key not equivalent"

    def protocol_checks():
        cfg = SessionConfig(key=bytes(16))
        s1 = Session(cfg, Role.INITIATOR, TriviumPrng(b"0" * 16))
        s2 = Session(cfg, Role.RESPONDER, TriviumPrng(b"1" * 16))
        data = bytes(rnd.randrange(256) for _ in range(8 * 100))
        assert s2.receive(s1.send(data)) == data
        assert s1.tx.parts.swap == s2.rx.parts.swap

    def cost_checks():
        p = costmodel.load_cipher("aes-gcm")
        assert costmodel.cycles_cipher(p, 128, include_init=True) == 19708
        r = costmodel.energy_table_reduction("acorn", "channel-acorn", 2048)
        assert 67.2 <= r <= 68.2, r

    check("sbox involution + checksum + regeneration", sbox_checks)
    check("network roundtrip (n=4 exhaustive, n=64 sampled)", cstn_checks)
    check("mirror + reversed configuration contract", mirror_checks)
    check("affine extraction matches evaluation", affine_checks)
    check("aead seal/open + tamper rejection", aead_checks)
    check("keystream determinism + warm-up gate", trivium_checks)
    check("health-test cutoffs", health_checks)
    check("key-recovery attack on omega-4", attack_checks)
    check("protocol loopback + feedback synchrony", protocol_checks)
    check("cost-model fixtures", cost_checks)
    print(f"{'FAILURES: ' + str(failures) if failures else 'all checks passed'}")
    return EXIT_PROTOCOL if failures else EXIT_OK


# ------------------------------------------------------------------ main

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="togglenet",
        description="Re-keyed switching-network channel: build, run, attack, model.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("net", help="construct a network and print its shape")
    _add_net_flags(p)
    p.add_argument("--info", action="store_true", help="print the shape (default)")
    p.add_argument("--coverage", choices=["exhaustive", "sampled"],
                   help="count reachable link permutations")
    p.add_argument("--budget", type=int, default=1 << 20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_net)

    for name, fn in (("encode", cmd_encode), ("decode", cmd_decode)):
        p = sub.add_parser(name, help=f"{name} stdin blocks under a fixed configuration")
        _add_net_flags(p)
        p.add_argument("--trn", help="configuration as hex")
        p.add_argument("--trn-file", help="JSON configuration file")
        p.add_argument("--seed", type=int, help="draw the configuration from this seed")
        p.add_argument("--trn-out", help="write the drawn configuration here")
        p.set_defaults(func=fn)

    p = sub.add_parser("session", help="stream data over TCP through the channel")
    p.add_argument("mode", choices=["send", "recv"])
    p.add_argument("--listen", metavar="HOST:PORT")
    p.add_argument("--connect", metavar="HOST:PORT")
    p.add_argument("--key", help=f"128-bit hex key (or ${KEY_ENV})")
    p.add_argument("--t", type=int, default=32, help="blocks per configuration")
    _add_net_flags(p)
    p.add_argument("--seed", type=int, help="deterministic generator seed (tests)")
    p.set_defaults(func=cmd_session)

    p = sub.add_parser("attack", help="oracle-guided key recovery on the network")
    _add_net_flags(p, default_kind="omega")
    p.add_argument("--timeout", type=float, help="seconds before censoring")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--workers", type=int, default=0, help="0 = one per trial")
    p.add_argument("--solver", default=None,
                   help="pysat backend (default: the attack module's default)")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--with-sbox", action="store_true",
                   help="include the substitution layer in the target")
    p.add_argument("--dimacs", help="export the keyed circuit as DIMACS CNF")
    p.add_argument("--report", help="write JSON-lines report here")
    p.add_argument("--fig", help="render iterations/time figure here")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("cost", help="cycle/energy model sweep")
    p.add_argument("--cipher", choices=["acorn", "aes-gcm"], default="acorn")
    _add_net_flags(p)
    p.add_argument("--t", type=int, default=32)
    p.add_argument("--sizes", default="32,64,128,256,512,768,1024,2048")
    p.add_argument("--include-init", action="store_true")
    p.add_argument("--accounting", choices=["interval", "message"], default="interval")
    p.add_argument("--csv", help="write the sweep table here (default stdout)")
    p.add_argument("--fig", help="render time/energy figure here")
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("rngtest", help="run health tests over a raw bit file")
    p.add_argument("--in", dest="infile", help="raw byte file (default stdin)")
    p.add_argument("--h", dest="entropy", type=float, default=1.0,
                   help="assessed entropy per bit")
    p.add_argument("--window", type=int, default=1024)
    p.set_defaults(func=cmd_rngtest)

    p = sub.add_parser("selftest", help="run the built-in property checks")
    p.set_defaults(func=cmd_selftest)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit:
        raise
    except (ProtocolError, SessionAborted, acorn.AuthenticationError) as exc:
        _log(f"error: {exc}")
        return EXIT_PROTOCOL


if __name__ == "__main__":
    sys.exit(main())
