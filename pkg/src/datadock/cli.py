"""Operator command line: run the server, bootstrap an admin, back up data.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import logging
import socket
import sys
import tarfile
from pathlib import Path

import click

from .backend import Backend
from .config import (
    DEFAULT_DATA_DIR,
    DEFAULT_MAX_FILE_MB,
    DEFAULT_PORT,
    DEFAULT_TOKEN_TTL_HOURS,
    ENV_PREFIX,
    ServerConfig,
)
from .errors import DataDockError


def _fail(message: str) -> "click.exceptions.Exit":
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


@click.group()
def main():
    """Self-hosted research data hub."""


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option(
    "--port",
    type=int,
    default=DEFAULT_PORT,
    show_default=True,
    envvar=ENV_PREFIX + "PORT",
    help="TCP port; 0 picks an ephemeral port and prints it.",
)
@click.option(
    "--data-dir",
    type=click.Path(path_type=Path),
    default=DEFAULT_DATA_DIR,
    show_default=True,
    envvar=ENV_PREFIX + "DATA_DIR",
)
@click.option(
    "--token-ttl-hours",
    type=float,
    default=DEFAULT_TOKEN_TTL_HOURS,
    show_default=True,
    envvar=ENV_PREFIX + "TOKEN_TTL_HOURS",
)
@click.option(
    "--max-file-mb",
    type=int,
    default=DEFAULT_MAX_FILE_MB,
    show_default=True,
    envvar=ENV_PREFIX + "MAX_FILE_MB",
)
@click.option(
    "--allow-anon-read/--no-allow-anon-read",
    default=False,
    show_default=True,
    envvar=ENV_PREFIX + "ALLOW_ANON_READ",
)
@click.option("--cors-origin", default=None, help="Allowed CORS origin for the web UI.")
@click.option(
    "--static-dir",
    type=click.Path(path_type=Path, exists=True, file_okay=False),
    default=None,
    help="Serve a built web UI from this directory at non-/api paths.",
)
def serve(host, port, data_dir, token_ttl_hours, max_file_mb, allow_anon_read,
          cors_origin, static_dir):
    """Run migrations and serve the REST API until interrupted."""
    import uvicorn

    from .api import create_app

    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(asctime)s %(name)s %(message)s"
    )
    config = ServerConfig(
        data_dir=data_dir,
        host=host,
        port=port,
        token_ttl_hours=token_ttl_hours,
        max_file_mb=max_file_mb,
        allow_anon_read=allow_anon_read,
        cors_origin=cors_origin,
        static_dir=static_dir,
    )
    if not Path(data_dir).parent.exists():
        _fail(f"parent of data dir {data_dir} does not exist")
    try:
        backend = Backend.open(config)
    except DataDockError as exc:
        _fail(f"store initialization failed: {exc}")

    app = create_app(backend)
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        sock.bind((host, port))
        sock.listen(128)
    except OSError as exc:
        sock.close()
        _fail(f"cannot bind {host}:{port}: {exc}")
    bound_port = sock.getsockname()[1]
    click.echo(f"listening on http://{host}:{bound_port}")
    server = uvicorn.Server(
        uvicorn.Config(
            app,
            log_config=None,
            access_log=False,
            timeout_graceful_shutdown=10,
        )
    )
    try:
        # uvicorn replays the interrupting signal after draining requests
        server.run(sockets=[sock])
    except KeyboardInterrupt:
        pass


@main.group()
def admin():
    """Administrative account operations."""


@admin.command("create")
@click.argument("username")
@click.argument("email")
@click.option(
    "--password",
    prompt=True,
    hide_input=True,
    confirmation_prompt=False,
    help="Prompted for when omitted.",
)
@click.option(
    "--data-dir",
    type=click.Path(path_type=Path),
    default=DEFAULT_DATA_DIR,
    show_default=True,
    envvar=ENV_PREFIX + "DATA_DIR",
)
def admin_create(username, email, password, data_dir):
    """Create an account with admin rights."""
    try:
        backend = Backend.open(ServerConfig(data_dir=data_dir))
        user = backend.auth.create_admin(username, email, password)
    except DataDockError as exc:
        _fail(str(exc))
    click.echo(f"admin account '{user.username}' created")


@main.command()
@click.argument("out_path", type=click.Path(path_type=Path))
@click.option(
    "--data-dir",
    type=click.Path(path_type=Path),
    default=DEFAULT_DATA_DIR,
    show_default=True,
    envvar=ENV_PREFIX + "DATA_DIR",
)
def backup(out_path, data_dir):
    """Write a tar archive of the store and blobs.

    Restore by extracting into an empty data directory while the server is
    stopped; the restored directory reproduces the full API-visible state.
    """
    data_dir = Path(data_dir)
    db_file = data_dir / "db"
    if not db_file.exists():
        _fail(f"no store found under {data_dir}")
    try:
        with tarfile.open(out_path, "w") as tar:
            tar.add(db_file, arcname="db")
            blobs_dir = data_dir / "blobs"
            if blobs_dir.exists():
                tar.add(blobs_dir, arcname="blobs")
    except OSError as exc:
        _fail(f"cannot write backup: {exc}")
    click.echo(f"backup written to {out_path}")


if __name__ == "__main__":
    main()
