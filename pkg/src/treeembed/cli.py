"""Command line interface: ``treeembed <subcommand> ...``.

Exit codes: 0 success, 2 precondition, 3 construction failure,
4 embedding failure, 5 verification mismatch.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from .allocation import allocate_spanning_many_leaves, allocate_spanning_many_paths
from .errors import InvalidArgument, TreeEmbedError
from .graph import (
    Digraph,
    Embedding,
    OrientedTree,
    ParamHierarchy,
    digraph_from_edgelist,
    digraph_from_json,
    digraph_to_edgelist,
    digraph_to_json,
    tree_from_json,
    tree_from_text,
    tree_to_json,
    tree_to_text,
    verify_embedding,
)
from .pipeline import (
    MODES,
    ExperimentConfig,
    allocate_almost_spanning,
    embed_almost_spanning,
    embed_spanning_tree,
    generate_host,
    host_hierarchy,
    records_to_csv,
    run_experiments,
)
from .regularity import build_cluster_partition, decomposition_from_json, decomposition_to_json
from .trees import random_tree

EXIT_OK, EXIT_PRECONDITION, EXIT_CONSTRUCTION, EXIT_EMBEDDING, EXIT_VERIFY = 0, 2, 3, 4, 5


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=not text.endswith("\n"))


def _read_host(path: str) -> Digraph:
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        return digraph_from_json(text)
    return digraph_from_edgelist(text)


def _read_tree(path: str) -> OrientedTree:
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        return tree_from_json(text)
    return tree_from_text(text)


def _params(G: Digraph, alpha, k, eps, d) -> ParamHierarchy:
    a = host_hierarchy(G).alpha if alpha is None else alpha
    p = ParamHierarchy.default_for(G.n, a, k=k)
    changes = {name: v for name, v in (("eps", eps), ("d", d)) if v is not None}
    return p.replace(**changes) if changes else p


def _fail(exc: TreeEmbedError) -> None:
    report = {"error": type(exc).__name__, "message": str(exc),
              "stage": getattr(exc, "pipeline_stage", None) or getattr(exc, "stage", None)}
    snap = getattr(exc, "snapshot", None)
    if snap:
        report["snapshot"] = snap
    cert = getattr(exc, "certificate", None)
    if cert is not None:
        report["certificate"] = cert
    click.echo(json.dumps(report, default=_jsonable), err=True)
    sys.exit(exc.exit_code)


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.generic):
        return x.item()
    return str(x)


def _guarded(fn):
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except TreeEmbedError as exc:
            _fail(exc)
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


common_fmt = click.option("--format", "fmt", type=click.Choice(["json", "csv", "edgelist"]),
                          default="json", show_default=True)


@click.group()
def main():
    """Embed oriented trees into dense digraphs."""


@main.command("gen-host")
@click.option("--n", type=int, required=True)
@click.option("--alpha", type=float, required=True)
@click.option("--model", type=click.Choice(["independent-arcs", "planted-minimum"]),
              default="independent-arcs", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
@common_fmt
@_guarded
def gen_host(n, alpha, model, seed, out, fmt):
    """Random host with minimum semidegree >= (1/2 + alpha) n."""
    G = generate_host(n, alpha, model, seed=seed)
    _emit(digraph_to_edgelist(G) if fmt == "edgelist" else digraph_to_json(G), out)


@main.command("gen-tree")
@click.option("--n", type=int, required=True)
@click.option("--family", type=click.Choice(["uniform", "path-rich", "leaf-rich"]),
              default="uniform", show_default=True)
@click.option("--max-degree", type=int, default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
@common_fmt
@_guarded
def gen_tree(n, family, max_degree, seed, out, fmt):
    """Random oriented tree (edgelist format: 'n root' then 'child parent +/-')."""
    T = random_tree(n, max_degree, family, seed=seed)
    _emit(tree_to_text(T) if fmt == "edgelist" else tree_to_json(T), out)


@main.command()
@click.option("--host", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--alpha", type=float, default=None)
@click.option("--k", type=int, default=None)
@click.option("--eps", type=float, default=None)
@click.option("--d", type=float, default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
@_guarded
def partition(host, alpha, k, eps, d, seed, out):
    """Cluster partition and reduced digraph of a host (JSON)."""
    G = _read_host(host)
    dec, red = build_cluster_partition(G, _params(G, alpha, k, eps, d), seed=seed)
    _emit(decomposition_to_json(dec, red), out)


@main.command()
@click.option("--tree", "tree_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--partition", "--reduced", "part_path",
              type=click.Path(exists=True, dir_okay=False), required=True,
              help="Decomposition JSON written by the partition subcommand.")
@click.option("--host", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Host file; needed to derive default constants in spanning modes.")
@click.option("--mode", type=click.Choice(["approx", "paths", "leaves", "spanning-paths",
                                           "spanning-leaves"]),
              default="approx", show_default=True)
@click.option("--alpha", type=float, default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
@_guarded
def allocate(tree_path, part_path, host, mode, alpha, seed, out):
    """Allocation of a tree to the clusters of a partition (JSON)."""
    T = _read_tree(tree_path)
    dec, red = decomposition_from_json(Path(part_path).read_text())
    if mode == "approx":
        _, phi, _ = allocate_almost_spanning(T, dec, red, seed)
    else:
        if host is None and alpha is None:
            raise InvalidArgument("spanning modes need --host or --alpha")
        n = T.n
        params = (ParamHierarchy.default_for(n, alpha, k=dec.k) if alpha is not None
                  else host_hierarchy(_read_host(host)))
        if mode.endswith("paths"):
            phi = allocate_spanning_many_paths(T, None, red, None, params, seed=seed).phi
        else:
            phi = allocate_spanning_many_leaves(T, red, None, params, seed=seed).phi
    _emit(phi.to_json(), out)


@main.command()
@click.option("--host", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--tree", "tree_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--mode", type=click.Choice(list(MODES)), default="approx", show_default=True)
@click.option("--alpha", type=float, required=True)
@click.option("--max-degree", type=int, default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
@_guarded
def embed(host, tree_path, mode, alpha, max_degree, seed, out):
    """Embed a tree into a host; prints the JSON map tree vertex -> host vertex."""
    G, T = _read_host(host), _read_tree(tree_path)
    if mode == "approx":
        emb = embed_almost_spanning(G, T, alpha, seed=seed, max_degree=max_degree)
    else:
        route = None if mode == "spanning-auto" else mode.split("-")[1]
        emb = embed_spanning_tree(G, T, alpha, seed=seed, route=route, max_degree=max_degree)
    _emit(emb.to_json(), out)


@main.command()
@click.option("--host", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--tree", "tree_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--embedding", "emb_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@_guarded
def verify(host, tree_path, emb_path):
    """Check an embedding file; exit 5 with diagnostics when it is not valid."""
    G, T = _read_host(host), _read_tree(tree_path)
    emb = Embedding.from_json(Path(emb_path).read_text())
    verdict = verify_embedding(G, T, emb)
    if not verdict:
        click.echo(json.dumps({"valid": False, "diagnostics": verdict.diagnostics[:20]}))
        sys.exit(EXIT_VERIFY)
    click.echo(json.dumps({"valid": True}))


@main.command()
@click.option("--n", type=int, required=True)
@click.option("--alpha", type=float, required=True)
@click.option("--mode", type=click.Choice(list(MODES)), default="approx", show_default=True)
@click.option("--generator", type=click.Choice(["independent-arcs", "planted-minimum"]),
              default="independent-arcs", show_default=True)
@click.option("--trials", type=int, default=20, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True, help="First seed.")
@click.option("--tree-n", type=int, default=None)
@click.option("--family", type=click.Choice(["uniform", "path-rich", "leaf-rich"]),
              default="uniform", show_default=True)
@click.option("--max-degree", type=int, default=6, show_default=True)
@click.option("--k", type=int, default=None)
@click.option("--eps", type=float, default=None)
@click.option("--d", type=float, default=None)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False),
              help="Writes OUT.csv and OUT.json; without it the summary is printed.")
@common_fmt
@_guarded
def experiment(n, alpha, mode, generator, trials, seed, tree_n, family, max_degree, k, eps, d,
               workers, out, fmt):
    """Batch of independent trials; failures are recorded, not raised."""
    params = {name: v for name, v in (("k", k), ("eps", eps), ("d", d)) if v is not None}
    cfg = ExperimentConfig(n=n, alpha=alpha, mode=mode, generator=generator, seed_start=seed,
                           trials=trials, tree_n=tree_n, tree_family=family,
                           max_degree=max_degree, params=params, workers=workers)
    res = run_experiments(cfg, out)
    if out is None:
        if fmt == "csv":
            click.echo(records_to_csv(res.records), nl=False)
        else:
            click.echo(json.dumps({"records": [r.to_dict() for r in res.records],
                                   "summary": res.summary}, indent=2))
    else:
        click.echo(json.dumps(res.summary))


if __name__ == "__main__":
    main()
