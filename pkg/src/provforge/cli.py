"""Command line for the quality provenance pipeline.

Local by default: blobs live in a directory store and the ledger in a
JSON file. Pointing --store-url / --ledger-url at a running service turns
the same commands into thin clients; remote ledger state is always
re-verified locally by replaying the downloaded log.

Exit codes: 0 ok, 1 verification failure, 2 not-found or missing input,
3 conflict with ledger state, 4 storage or remote failure, 5 integrity
violation in persisted data.
"""

from __future__ import annotations

import functools
import json
import random
import sys
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path

import click
from filelock import FileLock

from . import __version__
from . import ledger as ledgerlib
from .cid import Cid, format_uri, parse_uri
from .client import LedgerServiceClient
from .envelope import EncryptedEnvelope, decrypt, generate_key, load_key, save_key
from .errors import (
    AuthenticationFailure,
    CidFormatError,
    IntegrityViolation,
    InvalidCollection,
    LedgerIntegrityError,
    ProvForgeError,
    RemoteError,
    StoreUnavailable,
    TokenExists,
    Unauthorized,
)
from .ledger import Address, LedgerState, load_ledger, save_ledger
from .provenance import (
    MetadataHeader,
    append_manufacturing_step,
    mint_quality_nft,
    parse_metadata,
    publish_step,
    render_report_text,
    report_to_dict,
    verify_provenance,
)
from .quality import (
    FeatureKind,
    evaluate_workpiece,
    format_mm,
    load_measurements,
    load_workpiece_definition,
    report_from_json,
    report_to_json,
)
from .store import LocalStore, RemoteStore

DEFAULT_DATA_DIR = Path("provforge-data")
DEFAULT_STORE_DIR = DEFAULT_DATA_DIR / "store"
DEFAULT_LEDGER_FILE = DEFAULT_DATA_DIR / "ledger.json"


def _exit_code_for(exc: ProvForgeError) -> int:
    if isinstance(exc, (LedgerIntegrityError, IntegrityViolation)):
        return 5
    if isinstance(exc, (StoreUnavailable, RemoteError)):
        return 4
    if isinstance(exc, (TokenExists, Unauthorized, InvalidCollection)):
        return 3
    if isinstance(exc, AuthenticationFailure):
        return 1
    return 2


def _fail(message: str, code: int) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _with_domain_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except FileNotFoundError as exc:
            _fail(f"file not found: {exc.filename or exc}", 2)
        except ProvForgeError as exc:
            _fail(str(exc), _exit_code_for(exc))
        except OSError as exc:
            _fail(str(exc), 4)

    return wrapper


# --- shared options -----------------------------------------------------------------


def _store_options(fn):
    fn = click.option(
        "--store-url",
        envvar="PF_STORE_URL",
        default=None,
        help="endpoint of a blob-store service (IPFS HTTP API shape)",
    )(fn)
    fn = click.option(
        "--store",
        "store_dir",
        envvar="PF_STORE_DIR",
        default=None,
        type=click.Path(file_okay=False, path_type=Path),
        help=f"local blob directory [default: {DEFAULT_STORE_DIR}]",
    )(fn)
    return fn


def _ledger_options(fn):
    fn = click.option(
        "--ledger-url",
        envvar="PF_LEDGER_URL",
        default=None,
        help="endpoint of a ledger service",
    )(fn)
    fn = click.option(
        "--ledger",
        "ledger_file",
        envvar="PF_LEDGER_FILE",
        default=None,
        type=click.Path(dir_okay=False, path_type=Path),
        help=f"local ledger file [default: {DEFAULT_LEDGER_FILE}]",
    )(fn)
    return fn


def _key_option(fn):
    return click.option(
        "--key",
        "key_file",
        envvar="PF_KEY_FILE",
        required=True,
        type=click.Path(dir_okay=False, path_type=Path),
        help="key file (env PF_KEY_FILE)",
    )(fn)


def _format_option(fn):
    return click.option(
        "--format",
        "output_format",
        type=click.Choice(["text", "json"]),
        default="text",
        show_default=True,
        help="output format",
    )(fn)


def _seed_nonce_option(fn):
    return click.option("--seed-nonce", type=int, default=None, hidden=True)(fn)


@contextmanager
def _open_store(store_dir: Path | None, store_url: str | None):
    if store_dir is not None and store_url is not None:
        raise click.UsageError("use either --store or --store-url, not both")
    if store_url is not None:
        remote = RemoteStore(store_url)
        try:
            yield remote
        finally:
            remote.close()
    else:
        yield LocalStore(store_dir if store_dir is not None else DEFAULT_STORE_DIR)


def _resolve_ledger(ledger_file: Path | None, ledger_url: str | None) -> tuple[Path | None, str | None]:
    if ledger_file is not None and ledger_url is not None:
        raise click.UsageError("use either --ledger or --ledger-url, not both")
    if ledger_url is not None:
        return None, ledger_url
    return ledger_file if ledger_file is not None else DEFAULT_LEDGER_FILE, None


def _read_ledger_state(ledger_file: Path | None, ledger_url: str | None) -> LedgerState:
    path, url = _resolve_ledger(ledger_file, ledger_url)
    if url is not None:
        with LedgerServiceClient(url) as client:
            return client.fetch_state()
    if not path.exists():
        raise InvalidCollection(f"no collection deployed at {path}")
    return load_ledger(path)


def _mutate_local_ledger(path: Path, op) -> LedgerState:
    """Applies op under a file lock; the op gets and returns a LedgerState."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with FileLock(str(path) + ".lock"):
        if not path.exists():
            raise InvalidCollection(f"no collection deployed at {path}")
        state = op(load_ledger(path))
        save_ledger(state, path)
        return state


def _as_cid(value: str) -> Cid:
    try:
        return Cid.parse(value)
    except CidFormatError:
        return parse_uri(value)


def _nonce_source(seed: int | None):
    if seed is None:
        return None
    rng = random.Random(seed)
    return rng.randbytes


def _parse_timestamp(value: str | None) -> datetime:
    if value is None:
        return datetime.now(timezone.utc)
    try:
        return datetime.fromisoformat(value.replace("Z", "+00:00"))
    except ValueError as exc:
        raise click.UsageError(f"--created-at: {exc}")


def _metadata_header(name: str, description: str, image: str) -> MetadataHeader:
    return MetadataHeader(name=name, description=description, image=format_uri(_as_cid(image)))


def _echo_json(obj) -> None:
    click.echo(json.dumps(obj, indent=2, sort_keys=True))


# --- commands ----------------------------------------------------------------------


@click.group()
@click.version_option(version=__version__, prog_name="provforge")
def main():
    """Tamper-evident quality provenance: evaluate, seal, store, mint, verify."""


@main.command()
@click.argument("workpiece_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("measurements_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--out", "-o", type=click.Path(dir_okay=False, path_type=Path), help="write the quality report to this file")
@click.option("--created-at", default=None, help="ISO-8601 timestamp to record (default: now, UTC)")
@_format_option
@_with_domain_errors
def evaluate(workpiece_file, measurements_file, out, created_at, output_format):
    """Evaluate measured actuals against a workpiece definition."""
    definition = load_workpiece_definition(workpiece_file.read_bytes())
    actuals = load_measurements(measurements_file.read_bytes())
    report = evaluate_workpiece(
        list(definition.features),
        actuals,
        workpiece_id=definition.workpiece_id,
        product_name=definition.product_name,
        created_at=_parse_timestamp(created_at),
    )
    if out is not None:
        out.write_text(report_to_json(report))
    if output_format == "json":
        click.echo(report_to_json(report), nl=False)
        return
    by_id = {spec.feature_id: spec for spec in definition.features}
    headers = ("Feature Name", "Actual Size", "Deviation", "Within Tolerance")
    rows = []
    for record in report.records:
        spec = by_id[record.feature_id]
        if spec.kind is FeatureKind.BAND:
            deviation = f"±{format_mm(record.deviation_mm)} mm"
        else:
            sign = "-" if record.deviation_mm < 0 else "+"
            deviation = f"{sign}{format_mm(abs(record.deviation_mm))} mm"
        rows.append(
            (
                spec.display_name,
                f"{format_mm(record.actual_mm)} mm",
                deviation,
                str(record.in_spec),
            )
        )
    widths = [max(len(headers[i]), max(len(row[i]) for row in rows)) for i in range(len(headers))]
    if report.product_name:
        click.echo(f"Workpiece {report.workpiece_id} ({report.product_name})")
    else:
        click.echo(f"Workpiece {report.workpiece_id}")
    click.echo("  ".join(headers[i].ljust(widths[i]) for i in range(len(headers))).rstrip())
    for row in rows:
        click.echo("  ".join(row[i].ljust(widths[i]) for i in range(len(headers))).rstrip())


@main.command()
@_key_option
@click.option("--key-id", default=None, help="identifier baked into envelopes (default: key file stem)")
@click.option("--force", is_flag=True, help="overwrite an existing key file")
@_with_domain_errors
def keygen(key_file, key_id, force):
    """Generate a fresh 256-bit key file plus its key-id sidecar."""
    if key_file.exists() and not force:
        _fail(f"refusing to overwrite existing key file {key_file} (use --force)", 3)
    key = generate_key(key_id if key_id else key_file.stem)
    save_key(key, key_file)
    click.echo(f"wrote key {key.key_id!r} to {key_file}")


@main.command("deploy")
@click.option("--name", required=True, help="collection name")
@click.option("--symbol", required=True, help="collection symbol")
@_ledger_options
@_format_option
@_with_domain_errors
def deploy_collection(name, symbol, ledger_file, ledger_url, output_format):
    """Create the token collection (once per ledger)."""
    path, url = _resolve_ledger(ledger_file, ledger_url)
    if url is not None:
        with LedgerServiceClient(url) as client:
            client.deploy(name, symbol)
        where = url
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        with FileLock(str(path) + ".lock"):
            if path.exists():
                raise InvalidCollection(f"a collection is already deployed at {path}")
            save_ledger(ledgerlib.deploy(name, symbol), path)
        where = str(path)
    if output_format == "json":
        _echo_json({"name": name, "symbol": symbol, "ledger": where})
    else:
        click.echo(f"deployed collection {name} ({symbol}) at {where}")


def _publish(report_file, workpiece_file, key_file, store_dir, store_url,
             producer, step_index, header, seed_nonce):
    report = report_from_json(report_file.read_bytes())
    definition = load_workpiece_definition(workpiece_file.read_bytes())
    key = load_key(key_file)
    with _open_store(store_dir, store_url) as store:
        return publish_step(
            report,
            list(definition.features),
            key,
            store,
            metadata_header=header,
            producer=producer,
            step_index=step_index,
            nonce_source=_nonce_source(seed_nonce),
        )


def _default_name(report, token_id: int | None) -> str:
    product = report.product_name or report.workpiece_id
    if token_id is None:
        return f"Proof of quality {product}"
    return f"Proof of quality {product} product ID {token_id}"


def _default_description(report, step_index: int) -> str:
    return f"Quality record for workpiece {report.workpiece_id}, manufacturing step {step_index}"


@main.command()
@click.argument("report_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("workpiece_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--producer", required=True, help="company or station recording this step")
@click.option("--step-index", type=click.IntRange(min=0), required=True, help="manufacturing step number")
@click.option("--name", "meta_name", default=None, help="metadata display name")
@click.option("--description", "meta_description", default=None, help="metadata description")
@click.option("--image", "meta_image", required=True, help="CID or ipfs:// URI of a stored display image")
@_key_option
@_store_options
@_seed_nonce_option
@_format_option
@_with_domain_errors
def publish(report_file, workpiece_file, producer, step_index, meta_name, meta_description,
            meta_image, key_file, store_dir, store_url, seed_nonce, output_format):
    """Seal a quality report and store the payload and metadata blobs."""
    report = report_from_json(report_file.read_bytes())
    header = _metadata_header(
        meta_name if meta_name else _default_name(report, None),
        meta_description if meta_description else _default_description(report, step_index),
        meta_image,
    )
    metadata_cid, payload_cid = _publish(
        report_file, workpiece_file, key_file, store_dir, store_url,
        producer, step_index, header, seed_nonce,
    )
    if output_format == "json":
        _echo_json({"metadata_uri": format_uri(metadata_cid), "payload_uri": format_uri(payload_cid)})
    else:
        click.echo(f"metadata: {format_uri(metadata_cid)}")
        click.echo(f"payload:  {format_uri(payload_cid)}")


@main.command()
@click.argument("report_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("workpiece_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--token-id", type=click.IntRange(min=0), required=True)
@click.option("--owner", required=True, help="minting address (becomes the owner)")
@click.option("--producer", required=True, help="company or station recording this step")
@click.option("--step-index", type=click.IntRange(min=0), required=True, help="manufacturing step number")
@click.option("--name", "meta_name", default=None, help="metadata display name")
@click.option("--description", "meta_description", default=None, help="metadata description")
@click.option("--image", "meta_image", required=True, help="CID or ipfs:// URI of a stored display image")
@_key_option
@_store_options
@_ledger_options
@_seed_nonce_option
@_format_option
@_with_domain_errors
def mint(report_file, workpiece_file, token_id, owner, producer, step_index, meta_name,
         meta_description, meta_image, key_file, store_dir, store_url, ledger_file,
         ledger_url, seed_nonce, output_format):
    """Publish a quality report and mint the token anchoring it."""
    owner_address = Address.parse(owner)
    report = report_from_json(report_file.read_bytes())
    header = _metadata_header(
        meta_name if meta_name else _default_name(report, token_id),
        meta_description if meta_description else _default_description(report, step_index),
        meta_image,
    )
    metadata_cid, payload_cid = _publish(
        report_file, workpiece_file, key_file, store_dir, store_url,
        producer, step_index, header, seed_nonce,
    )
    path, url = _resolve_ledger(ledger_file, ledger_url)
    if url is not None:
        with LedgerServiceClient(url) as client:
            client.mint(owner_address, token_id, format_uri(metadata_cid))
    else:
        _mutate_local_ledger(path, lambda s: mint_quality_nft(s, owner_address, token_id, metadata_cid))
    if output_format == "json":
        _echo_json(
            {
                "token_id": token_id,
                "metadata_uri": format_uri(metadata_cid),
                "payload_uri": format_uri(payload_cid),
            }
        )
    else:
        click.echo(f"token:    {token_id}")
        click.echo(f"metadata: {format_uri(metadata_cid)}")
        click.echo(f"payload:  {format_uri(payload_cid)}")


@main.command()
@click.option("--token-id", type=click.IntRange(min=0), required=True)
@click.option("--caller", required=True, help="address appending the record (must own the token)")
@click.option("--metadata-cid", required=True, help="CID or ipfs:// URI of already-stored metadata")
@_ledger_options
@_format_option
@_with_domain_errors
def append(token_id, caller, metadata_cid, ledger_file, ledger_url, output_format):
    """Append an additional manufacturing step's metadata to a token."""
    caller_address = Address.parse(caller)
    cid = _as_cid(metadata_cid)
    path, url = _resolve_ledger(ledger_file, ledger_url)
    if url is not None:
        with LedgerServiceClient(url) as client:
            client.append_uri(caller_address, token_id, format_uri(cid))
    else:
        _mutate_local_ledger(path, lambda s: append_manufacturing_step(s, caller_address, token_id, cid))
    if output_format == "json":
        _echo_json({"token_id": token_id, "appended_uri": format_uri(cid)})
    else:
        click.echo(f"appended {format_uri(cid)} to token {token_id}")


@main.command()
@click.option("--token-id", type=click.IntRange(min=0), required=True)
@click.option("--from", "from_address", required=True, help="current owner address")
@click.option("--to", "to_address", required=True, help="new owner address")
@_ledger_options
@_format_option
@_with_domain_errors
def transfer(token_id, from_address, to_address, ledger_file, ledger_url, output_format):
    """Transfer token ownership (and with it, append rights)."""
    sender = Address.parse(from_address)
    receiver = Address.parse(to_address)
    path, url = _resolve_ledger(ledger_file, ledger_url)
    if url is not None:
        with LedgerServiceClient(url) as client:
            client.transfer(sender, receiver, token_id)
    else:
        _mutate_local_ledger(path, lambda s: ledgerlib.transfer(s, sender, receiver, token_id))
    if output_format == "json":
        _echo_json({"token_id": token_id, "owner": receiver.text})
    else:
        click.echo(f"token {token_id} transferred to {receiver.text}")


class _StepSpecs(dict):
    """specs-by-step mapping with an optional fallback for unlisted steps."""

    def __init__(self):
        super().__init__()
        self.default = None

    def get(self, key, default=None):
        if key in self:
            return super().get(key)
        return self.default if self.default is not None else default


@main.command()
@click.option("--token-id", type=click.IntRange(min=0), required=True)
@click.option(
    "--specs",
    "specs_items",
    multiple=True,
    help="workpiece definition for verdict cross-checks, as PATH or STEP=PATH (repeatable)",
)
@_key_option
@_store_options
@_ledger_options
@_format_option
@_with_domain_errors
def verify(token_id, specs_items, key_file, store_dir, store_url, ledger_file, ledger_url, output_format):
    """Verify a token's full provenance trail; exit 0 only if it all holds."""
    specs_map = _StepSpecs()
    for item in specs_items:
        step_text, sep, path_text = item.partition("=")
        if sep and step_text.isdigit():
            features = load_workpiece_definition(Path(path_text).read_bytes()).features
            specs_map[int(step_text)] = list(features)
        else:
            specs_map.default = list(load_workpiece_definition(Path(item).read_bytes()).features)
    state = _read_ledger_state(ledger_file, ledger_url)
    key = load_key(key_file)
    with _open_store(store_dir, store_url) as store:
        report = verify_provenance(state, token_id, key, store, specs_map)
    if output_format == "json":
        _echo_json(report_to_dict(report))
    else:
        click.echo(render_report_text(report), nl=False)
    sys.exit(0 if report.overall_ok else 1)


@main.command("inspect-metadata")
@click.argument("cid_or_uri")
@_store_options
@_format_option
@_with_domain_errors
def inspect_metadata(cid_or_uri, store_dir, store_url, output_format):
    """Fetch and display a stored metadata document."""
    cid = _as_cid(cid_or_uri)
    with _open_store(store_dir, store_url) as store:
        data = store.get(cid)
    header, payload_cid = parse_metadata(data)
    if output_format == "json":
        _echo_json(json.loads(data))
        return
    click.echo(f"name:        {header.name}")
    click.echo(f"description: {header.description}")
    click.echo(f"image:       {header.image}")
    click.echo(f"attributes:  {list(header.attributes)}")
    click.echo(f"payload:     {format_uri(payload_cid)}")


@main.command("decrypt")
@click.argument("cid_or_uri")
@click.option("--out", "-o", type=click.Path(dir_okay=False, path_type=Path), help="write plaintext here instead of stdout")
@_key_option
@_store_options
@_with_domain_errors
def decrypt_blob(cid_or_uri, out, key_file, store_dir, store_url):
    """Fetch a sealed blob and decrypt it with the key file."""
    cid = _as_cid(cid_or_uri)
    key = load_key(key_file)
    with _open_store(store_dir, store_url) as store:
        data = store.get(cid)
    plaintext = decrypt(EncryptedEnvelope.from_bytes(data), key)
    if out is not None:
        out.write_bytes(plaintext)
        click.echo(f"wrote {len(plaintext)} bytes to {out}")
    else:
        click.get_binary_stream("stdout").write(plaintext)


if __name__ == "__main__":
    main()
