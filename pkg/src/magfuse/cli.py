"""Command-line interface: one-shot parsing, local teaching, grammar tools,
and the HTTP service runner.

Exit codes: 0 on success, 3 when a sentence is not parseable, 1 on errors.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .commands import frame_from_wire
from .magfile import GrammarFileError, load_grammar
from .service import Engine, SessionState, create_app

GRAMMAR_OPTION = click.option(
    "--grammar",
    "grammar_path",
    envvar="MAGFUSE_GRAMMAR",
    default="magfuse.mag",
    show_default=True,
    help="Grammar file (created on first commit if absent).",
)

EXIT_NOT_PARSEABLE = 3


@click.group()
def main() -> None:
    """Multimodal grammar fusion for driver-assistance commands."""


def _read_streams(tokens_file: str) -> list[list[dict]]:
    try:
        data = json.loads(Path(tokens_file).read_text("utf-8"))
    except FileNotFoundError:
        raise click.ClickException(f"no such file: {tokens_file}")
    except json.JSONDecodeError as exc:
        raise click.ClickException(f"{tokens_file}: invalid JSON ({exc})")
    if isinstance(data, dict) and "streams" in data:
        data = data["streams"]
    if not isinstance(data, list) or not all(isinstance(s, list) for s in data):
        raise click.ClickException(f"{tokens_file}: expected a JSON array of streams")
    return data


def _print_tree(node: dict, indent: int = 0) -> None:
    pad = "  " * indent
    attrs = node.get("attrs", {})
    shown = ", ".join(f"{k}={attrs[k]}" for k in ("val", "mod", "synrole", "coop") if k in attrs)
    pid = f" [{node['production_id']}]" if node.get("production_id") else ""
    click.echo(f"{pad}{node['symbol']}{pid}  {shown}")
    for child in node.get("children", ()):
        _print_tree(child, indent + 1)


@main.command()
@click.argument("tokens_file")
@GRAMMAR_OPTION
def parse(tokens_file: str, grammar_path: str) -> None:
    """Parse a token-streams JSON file and print the tree and command frame."""
    engine = Engine(grammar_path if Path(grammar_path).exists() else None)
    try:
        result = engine.parse_streams(_read_streams(tokens_file))
    except ValueError as exc:
        raise click.ClickException(str(exc))
    if result["status"] == "parsed":
        _print_tree(result["tree"])
        click.echo(json.dumps(result["frame"], indent=2))
        return
    click.echo("not parseable")
    click.echo(f"unknown tokens: {', '.join(result['unknowns']) or '(none)'}")
    for span in result["spans"]:
        label = span["symbol"] or f"?{span['value']!r}"
        click.echo(f"  [{span['start']}:{span['end']}] {label}")
    sys.exit(EXIT_NOT_PARSEABLE)


@main.command()
@click.argument("tokens_file")
@click.option("--role", "roles", multiple=True, metavar="TOKEN=ROLE",
              help="Syntactic role for an unknown token (repeatable).")
@click.option("--meaning", required=True,
              help='Command frame JSON, e.g. \'{"action": "set", "params": {"value": "<num>"}}\'.')
@click.option("--yes", is_flag=True, help="Commit without the confirmation prompt.")
@GRAMMAR_OPTION
def teach(tokens_file: str, roles: tuple[str, ...], meaning: str, yes: bool,
          grammar_path: str) -> None:
    """Run the teach loop for an unparseable sentence against a local grammar."""
    engine = Engine(grammar_path)
    try:
        frame_from_wire(json.loads(meaning))
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise click.ClickException(f"--meaning: {exc}")

    result = engine.parse_streams(_read_streams(tokens_file))
    if result["status"] == "parsed":
        click.echo("sentence already parses; nothing to teach")
        click.echo(json.dumps(result["frame"], indent=2))
        return

    role_map = {}
    for pair in roles:
        token, sep, role = pair.partition("=")
        if not sep:
            raise click.ClickException(f"--role needs TOKEN=ROLE, got {pair!r}")
        role_map[token] = role
    sid = result["session_id"]
    try:
        engine.teach_roles(sid, role_map)
        proposal = engine.teach_meaning(sid, json.loads(meaning))
    except ValueError as exc:
        raise click.ClickException(str(exc))

    click.echo("proposed rules:")
    click.echo(proposal["delta"])
    if not yes and not click.confirm("commit these rules?"):
        engine.teach_confirm(sid, "reject")
        click.echo("rejected; grammar unchanged")
        return
    outcome = engine.teach_confirm(sid, "confirm")
    assert outcome["state"] == SessionState.COMMITTED.value
    click.echo(f"committed; grammar written to {grammar_path}")


@main.group()
def grammar() -> None:
    """Inspect, validate, and export grammar files."""


@grammar.command("show")
@GRAMMAR_OPTION
def grammar_show(grammar_path: str) -> None:
    """Print the active grammar in .mag form."""
    engine = Engine(grammar_path if Path(grammar_path).exists() else None)
    click.echo(engine.grammar_text(), nl=False)


@grammar.command("check")
@click.argument("mag_file")
def grammar_check(mag_file: str) -> None:
    """Validate a grammar file; exits 1 with a violation list if invalid."""
    try:
        text = Path(mag_file).read_text("utf-8")
    except FileNotFoundError:
        raise click.ClickException(f"no such file: {mag_file}")
    try:
        g = load_grammar(text)
    except GrammarFileError as exc:
        raise click.ClickException(str(exc))
    click.echo(
        f"ok: {len(g.productions)} productions, {len(g.terminals)} terminals, "
        f"{len(g.nonterminals)} nonterminals"
    )


@grammar.command("export")
@click.argument("out_file")
@GRAMMAR_OPTION
def grammar_export(out_file: str, grammar_path: str) -> None:
    """Write the active grammar to a file."""
    engine = Engine(grammar_path if Path(grammar_path).exists() else None)
    Path(out_file).write_text(engine.grammar_text(), encoding="utf-8")
    click.echo(f"wrote {out_file}")


@main.command()
@click.option("--port", default=8077, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--grammar-file", "grammar_path", envvar="MAGFUSE_GRAMMAR",
              default="magfuse.mag", show_default=True)
def serve(port: int, host: str, grammar_path: str) -> None:
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run(create_app(Engine(grammar_path)), host=host, port=port)


if __name__ == "__main__":
    main()
