"""Command line driver: compile, verify and report subcommands.

Exit codes: 0 success, 1 compile failure or verification mismatch, 2 missing
input file, 3 dimension mismatch between netlist and layer/input, 4 corrupt
netlist file.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import os
import sys

import numpy as np

from .codegen import load_netlist
from .errors import ConfigMismatchError, NetlistFormatError, TlmacError
from .pipeline import PipelineOptions, compile_and_emit
from .qweights import load_activations, load_layers, reshape_to_groups, save_output
from .reports import export_reports, report_from_netlist
from .simulate import oracle_conv, simulate_layer

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_MISSING_INPUT = 2
EXIT_DIM_MISMATCH = 3
EXIT_BAD_NETLIST = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tlmac",
        description="Compile quantised convolution layers onto table-lookup "
                    "MAC processing elements.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    comp = sub.add_parser("compile", help="compile QWeights files into netlists and reports")
    comp.add_argument("inputs", nargs="+", help="QWeights JSON file(s)")
    comp.add_argument("-o", "--out-dir", default="out", help="output directory")
    comp.add_argument("-P", "--parallel-factor", type=int, default=64,
                      help="output channels processed in parallel per step")
    comp.add_argument("--nn-k", type=int, default=None,
                      help="neighbour count for the clustering graph")
    comp.add_argument("--seed", type=int, default=0,
                      help="seed for clustering and initial placement")
    comp.add_argument("--anneal-iters", type=int, default=10000,
                      help="annealing iterations per layer")
    comp.add_argument("--anneal-alpha", type=float, default=1.4,
                      help="annealing cooling exponent")
    comp.add_argument("--anneal-seed", type=int, default=0,
                      help="seed for the annealing walk")
    comp.add_argument("--anneal-budget-per-route", type=float, default=None,
                      help="iterations per initial route, overrides --anneal-iters")
    comp.add_argument("--jobs", type=int, default=1,
                      help="layers compiled concurrently")
    comp.add_argument("--verify", action="store_true",
                      help="simulate each compiled layer against the reference "
                           "convolution on random input")

    ver = sub.add_parser("verify", help="check a netlist bit-exactly against the reference")
    ver.add_argument("netlist", help="netlist JSON file")
    ver.add_argument("--weights", required=True, help="QWeights file of the same layer")
    ver.add_argument("--input", required=True, help="activation tensor JSON file")
    ver.add_argument("--stride", type=int, default=1)
    ver.add_argument("--pad", type=int, default=0)
    ver.add_argument("--save-output", default=None,
                     help="write the simulated output tensor to this path")

    rep = sub.add_parser("report", help="regenerate CSV reports from stored netlists")
    rep.add_argument("inputs", nargs="+",
                     help="netlist files or directories containing *.netlist.json")
    rep.add_argument("-o", "--out-dir", default="reports", help="report directory")
    return parser


def _missing(paths: list[str]) -> str | None:
    for path in paths:
        if not os.path.exists(path):
            return path
    return None


def _cmd_compile(args) -> int:
    missing = _missing(args.inputs)
    if missing is not None:
        print(f"tlmac: no such input: {missing}", file=sys.stderr)
        return EXIT_MISSING_INPUT

    options = PipelineOptions(
        parallel_factor=args.parallel_factor,
        nn_k=args.nn_k,
        seed=args.seed,
        anneal_iters=args.anneal_iters,
        anneal_alpha=args.anneal_alpha,
        anneal_seed=args.anneal_seed,
        anneal_budget_per_route=args.anneal_budget_per_route,
        verify=args.verify,
    )

    layers = []
    failures = 0
    for path in args.inputs:
        try:
            layers.extend(load_layers(path))
        except TlmacError as exc:
            print(f"tlmac: {path}: {exc}", file=sys.stderr)
            failures += 1
    if failures:
        return EXIT_FAIL
    names = [layer.name for layer in layers]
    for name in sorted(set(n for n in names if names.count(n) > 1)):
        print(f"tlmac: duplicate layer name {name!r}, artifacts would collide",
              file=sys.stderr)
        failures += 1
    if failures:
        return EXIT_FAIL

    os.makedirs(args.out_dir, exist_ok=True)
    jobs = max(1, args.jobs)
    tasks = [(layer, options, os.path.join(args.out_dir, f"{layer.name}.netlist.json"))
             for layer in layers]

    reports = {}
    if jobs == 1 or len(tasks) <= 1:
        for layer, opts, netlist_path in tasks:
            try:
                reports[layer.name] = compile_and_emit(layer, opts, netlist_path)
            except TlmacError as exc:
                print(f"tlmac: layer {layer.name!r}: {exc}", file=sys.stderr)
                failures += 1
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {
                pool.submit(compile_and_emit, layer, opts, netlist_path): layer.name
                for layer, opts, netlist_path in tasks
            }
            for future in concurrent.futures.as_completed(futures):
                name = futures[future]
                try:
                    reports[name] = future.result()
                except TlmacError as exc:
                    print(f"tlmac: layer {name!r}: {exc}", file=sys.stderr)
                    failures += 1

    ordered = [reports[layer.name] for layer, _, _ in tasks if layer.name in reports]
    export_reports(ordered, os.path.join(args.out_dir, "reports"))
    for report in ordered:
        print(f"compiled {report.name}: {report.n_arrays} arrays, "
              f"{report.total_luts} LUTs, routes {report.routes_initial} -> "
              f"{report.routes_final}")
    return EXIT_FAIL if failures else EXIT_OK


def _cmd_verify(args) -> int:
    missing = _missing([args.netlist, args.weights, args.input])
    if missing is not None:
        print(f"tlmac: no such input: {missing}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    try:
        cfg = load_netlist(args.netlist)
    except NetlistFormatError as exc:
        print(f"tlmac: {exc}", file=sys.stderr)
        return EXIT_BAD_NETLIST
    try:
        layers = load_layers(args.weights)
        if len(layers) != 1:
            print(f"tlmac: {args.weights}: verify expects a single-layer file",
                  file=sys.stderr)
            return EXIT_FAIL
        layer = layers[0]
        acts, act_bits = load_activations(args.input)
        if act_bits != layer.act_bits:
            print(f"tlmac: activation bit width {act_bits} does not match "
                  f"layer B_a={layer.act_bits}", file=sys.stderr)
            return EXIT_DIM_MISMATCH
        if cfg.n_parallel % cfg.widths.group_size != 0:
            print("tlmac: netlist parallel width is not a multiple of the group size",
                  file=sys.stderr)
            return EXIT_BAD_NETLIST
        parallel_factor = cfg.n_parallel // cfg.widths.group_size
        grouped = reshape_to_groups(layer, parallel_factor)
        got = simulate_layer(cfg, grouped, acts, stride=args.stride, pad=args.pad)
        want = oracle_conv(layer, acts, stride=args.stride, pad=args.pad)
    except ConfigMismatchError as exc:
        print(f"tlmac: {exc}", file=sys.stderr)
        return EXIT_DIM_MISMATCH
    except TlmacError as exc:
        print(f"tlmac: {exc}", file=sys.stderr)
        return EXIT_FAIL

    if args.save_output:
        save_output(got, layer.acc_bits, args.save_output)
    if np.array_equal(got, want):
        print(f"verify {layer.name}: {got.size} outputs bit-exact")
        return EXIT_OK
    o, y, x = (int(v) for v in np.argwhere(got != want)[0])
    print(f"verify {layer.name}: FAILED, first mismatch at output ({o}, {y}, {x}): "
          f"simulated {int(got[o, y, x])}, expected {int(want[o, y, x])}",
          file=sys.stderr)
    return EXIT_FAIL


def _collect_netlists(inputs: list[str]) -> list[str]:
    paths = []
    for item in inputs:
        if os.path.isdir(item):
            names = sorted(n for n in os.listdir(item) if n.endswith(".netlist.json"))
            paths.extend(os.path.join(item, n) for n in names)
        else:
            paths.append(item)
    return paths


def _cmd_report(args) -> int:
    missing = _missing(args.inputs)
    if missing is not None:
        print(f"tlmac: no such input: {missing}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    reports = []
    for path in _collect_netlists(args.inputs):
        try:
            cfg = load_netlist(path)
        except NetlistFormatError as exc:
            print(f"tlmac: {exc}", file=sys.stderr)
            return EXIT_BAD_NETLIST
        name = os.path.basename(path)
        if name.endswith(".netlist.json"):
            name = name[: -len(".netlist.json")]
        reports.append(report_from_netlist(cfg, name))
    export_reports(reports, args.out_dir)
    print(f"wrote reports for {len(reports)} netlist(s) to {args.out_dir}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "compile":
        return _cmd_compile(args)
    if args.command == "verify":
        return _cmd_verify(args)
    if args.command == "report":
        return _cmd_report(args)
    raise AssertionError(f"unhandled command {args.command!r}")


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
