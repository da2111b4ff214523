"""Command-line entry point: ``artifact build|trial|sweep|verify|inspect|transform``.

Exit codes: 0 ok, 1 verification failure, 2 configuration error.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .circuit import ParseError, parse, serialize
from .experiment import (
    NOISE_KINDS, ConfigError, ExperimentConfig, config_dict, crossing_reports, noise_spec, rows_to_csv, run_sweep,
)
from .noise import FaultPattern
from .protocol import VARIANTS, ProtocolConfig, build_c_bell, structure_metrics


class ConfigProblem(click.ClickException):
    exit_code = 2


def _protocol(variant: str, R: int, L: int, noise: str = "none", p: float = 0.0, seed: int = 0) -> ProtocolConfig:
    try:
        return ProtocolConfig(R=R, L=L, noise=noise_spec(noise, p), seed=seed, variant=variant)
    except ValueError as e:
        raise ConfigProblem(str(e)) from e


@click.group()
def main():
    """Fault-tolerant one-shot Bell-pair generation on a 2D grid."""


_variant = click.option("--variant", type=click.Choice(VARIANTS), default="bell_strip", show_default=True)
_R = click.option("-R", "R", type=int, default=8, show_default=True, help="Strip length (bell_strip).")
_L = click.option("-L", "L", type=int, default=0, show_default=True, help="Concatenation level.")


@main.command()
@_variant
@_R
@_L
@click.option("--out", "out", type=click.Path(file_okay=False), default="build", show_default=True)
def build(variant, R, L, out):
    """Write circuit, layout.csv and decoder; print structural metrics."""
    art = build_c_bell(_protocol(variant, R, L))
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    (d / "circuit.txt").write_text(serialize(art.circuit))
    (d / "layout.csv").write_text(art.layout.to_csv())
    (d / "decoder.txt").write_text(art.decoder.to_text())
    m = structure_metrics(art)
    click.echo(f"N={m['N']} depth={m['depth']} locations={m['locations']} "
               f"l_x={m['l_x']} l_y={m['l_y']} distance={m['distance']} lifespan={m['lifespan']}")
    click.echo("grid validation: " + ("ok" if m["grid_errors"] == 0 else f"{m['grid_errors']} errors"))
    if m["grid_errors"]:
        sys.exit(1)


@main.command()
@_variant
@_R
@_L
@click.option("--noise", type=click.Choice(NOISE_KINDS), default="iid_depolarizing", show_default=True)
@click.option("-p", "p", type=float, default=0.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--index", type=int, default=0, show_default=True, help="Trial index within the seed's stream.")
@click.option("--replay", type=click.Path(exists=True, dir_okay=False), help="Fault pattern file to replay.")
@click.option("--save-faults", type=click.Path(dir_okay=False), help="Write the sampled fault pattern here.")
def trial(variant, R, L, noise, p, seed, index, replay, save_faults):
    """Run one trial and print its log line."""
    from .sim import run_protocol_trial, trial_faults
    cfg = _protocol(variant, R, L, noise, p, seed)
    art = build_c_bell(cfg)
    if replay:
        try:
            f = FaultPattern.from_text(Path(replay).read_text())
            f.check_within(art.circuit)
        except ValueError as e:
            raise ConfigProblem(f"bad replay file: {e}") from e
    else:
        f = trial_faults(cfg, art, index)
    if save_faults:
        Path(save_faults).write_text(f.to_text())
    res = run_protocol_trial(cfg, art, index, f)
    click.echo(res.log_line() + f" correction={res.correction}")


@main.command()
@click.option("--config", "config", type=click.Path(dir_okay=False), help="JSON experiment config.")
@click.option("--seed", type=int)
@click.option("--trials", type=int)
@click.option("--workers", type=int)
@click.option("--out", "out", type=click.Path(dir_okay=False))
@click.option("--no-timing", is_flag=True, help="Write wall_time as 0 so reruns are byte-identical.")
def sweep(config, seed, trials, workers, out, no_timing):
    """Success rate with Wilson intervals per (R, L, p); writes a CSV."""
    over = {"seed": seed, "trials": trials, "workers": workers, "out": out}
    if no_timing:
        over["timing"] = False
    try:
        if config:
            cfg = ExperimentConfig.load(config, **over)
        else:
            cfg = ExperimentConfig.from_dict({k: v for k, v in over.items() if v is not None})
    except ConfigError as e:
        raise ConfigProblem(str(e)) from e
    click.echo(f"config {config_dict(cfg)}", err=True)

    def progress(r):
        click.echo(f"R={r.R} L={r.L} p={r.p:g}: {r.successes}/{r.trials} = {r.success_rate:.4f} "
                   f"[{r.wilson_lo:.4f}, {r.wilson_hi:.4f}]", err=True)
    rows = run_sweep(cfg, progress)
    Path(cfg.out).parent.mkdir(parents=True, exist_ok=True)
    Path(cfg.out).write_text(rows_to_csv(rows))
    for rep in crossing_reports(rows):
        click.echo(rep.line())
    click.echo(f"wrote {cfg.out}")


@main.command()
@click.option("--quick", is_flag=True, help="Fewer random instances per pass.")
def verify(quick):
    """Run the property suites; exit 1 if any group fails."""
    from .checks import all_groups
    ok = True
    for g in all_groups(quick):
        r = g()
        click.echo(r.line())
        ok &= r.ok
    sys.exit(0 if ok else 1)


@main.group()
def inspect():
    """Look at building blocks."""


@inspect.command("gadget")
@click.argument("role", type=click.Choice(["EC", "Prep0-Ga", "Meas-Ga", "Gate-Ga"]))
@click.option("--gate", "gate_name", default=None, help="Gate for Gate-Ga (I X Y Z H S CNOT SWAP).")
@click.option("--check", is_flag=True, help="Also run the single-fault contract.")
@click.option("--show", is_flag=True, help="Print the gadget circuit.")
def inspect_gadget(role, gate_name, check, show):
    """Size, depth and (optionally) contract of one gadget."""
    from .steane import UnsupportedGadget, build_gadget, check_contract
    if role == "Gate-Ga" and not gate_name:
        raise ConfigProblem("Gate-Ga needs --gate")
    try:
        g = build_gadget(role, gate_name)
    except UnsupportedGadget as e:
        raise ConfigProblem(str(e)) from e
    c = g.circuit
    click.echo(f"{role}{'(' + gate_name + ')' if gate_name else ''}: qubits={c.n} depth={c.depth} "
               f"blocks={g.n_blocks} cbits={c.cbits}")
    for b, d in enumerate(g.data):
        click.echo(f"  block {b} data qubits: {','.join(map(str, d))}")
    if show:
        click.echo(serialize(c), nl=False)
    if check:
        rep = check_contract(role, gate_name)
        click.echo(rep.line())
        if not rep.ok:
            sys.exit(1)


@main.command()
@click.argument("infile", type=click.Path(exists=True, dir_okay=False))
@click.option("--pass", "passes", multiple=True, required=True,
              help="Pass name, optionally with parameters: inflate:m=2.")
@click.option("--out", "out", type=click.Path(dir_okay=False), help="Output file (default stdout).")
def transform(infile, passes, out):
    """Apply named passes to a circuit in the text format."""
    from .passes import PASSES, PassError, run_pipeline
    try:
        c = parse(Path(infile).read_text())
    except ParseError as e:
        raise ConfigProblem(str(e)) from e
    steps = []
    for spec in passes:
        name, _, rest = spec.partition(":")
        if name not in PASSES:
            raise ConfigProblem(f"unknown pass {name!r}; known: {', '.join(PASSES)}")
        kw = {}
        for item in filter(None, rest.split(",")):
            k, _, v = item.partition("=")
            try:
                kw[k] = int(v)
            except ValueError as e:
                raise ConfigProblem(f"bad parameter {item!r}") from e
        steps.append((name, kw))
    try:
        res, _ = run_pipeline(c, steps)
    except PassError as e:
        raise ConfigProblem(str(e)) from e
    text = serialize(res)
    if out:
        Path(out).write_text(text)
        click.echo(f"{c.n}x{c.depth} -> {res.n}x{res.depth}", err=True)
    else:
        click.echo(text, nl=False)


if __name__ == "__main__":
    main()
