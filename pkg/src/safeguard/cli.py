"""Command line entry point: serve, seed-pois, create-admin, outbox tail."""

from __future__ import annotations

import argparse
import secrets
import signal
import sys
import threading

from .app import App
from .config import load_config
from .errors import SafeguardError
from .gateway import GatewayServer
from .geo import read_pois_csv


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="safeguard", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    serve_p = sub.add_parser("serve", help="run the HTTP gateway")
    serve_p.add_argument("--config", help="config file (default: $SAFEGUARD_CONFIG)")

    seed_p = sub.add_parser("seed-pois", help="validate a POI CSV and install it for serving")
    seed_p.add_argument("csv")
    seed_p.add_argument("--config")

    admin_p = sub.add_parser("create-admin", help="create or promote an admin account")
    admin_p.add_argument("email")
    admin_p.add_argument("--config")

    outbox_p = sub.add_parser("outbox", help="inspect outbox files")
    outbox_p.add_argument("action", choices=["tail"])
    outbox_p.add_argument("which", choices=["sms", "push", "mail"])
    outbox_p.add_argument("-n", "--lines", type=int, default=10)
    outbox_p.add_argument("--config")

    args = parser.parse_args(argv)
    if not args.command:
        parser.print_usage(file=sys.stderr)
        return 2
    try:
        if args.command == "serve":
            return _cmd_serve(args)
        if args.command == "seed-pois":
            return _cmd_seed_pois(args)
        if args.command == "create-admin":
            return _cmd_create_admin(args)
        if args.command == "outbox":
            return _cmd_outbox(args)
    except SafeguardError as exc:
        print(f"error: {exc.code}: {exc.message}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 2


def _cmd_serve(args) -> int:
    config = load_config(args.config)
    server = GatewayServer(App(config)).start()
    print(f"safeguard listening on http://{server.address}", flush=True)
    stop = threading.Event()

    def shutdown(signum, frame):
        stop.set()

    signal.signal(signal.SIGINT, shutdown)
    signal.signal(signal.SIGTERM, shutdown)
    stop.wait()
    print("shutting down, writing snapshot", flush=True)
    server.stop()
    return 0


def _cmd_seed_pois(args) -> int:
    config = load_config(args.config)
    pois, rejected = read_pois_csv(args.csv)
    config.data_path.mkdir(parents=True, exist_ok=True)
    with open(config.pois_path, "w", encoding="utf-8") as fh:
        fh.write("id,name,category,lat,lon\n")
        for poi in pois:
            name = poi.name.replace('"', '""')
            fh.write(f'{poi.id},"{name}",{poi.category},{poi.location.lat!r},{poi.location.lon!r}\n')
    print(f"accepted {len(pois)} rejected {len(rejected)}")
    for lineno, reason in rejected:
        print(f"line {lineno}: {reason}", file=sys.stderr)
    return 0


def _cmd_create_admin(args) -> int:
    # run against the data directory directly; stop the server first
    config = load_config(args.config)
    app = App(config)
    try:
        email = args.email.strip().lower()
        existing = app.auth._find_user_id_by_email(email)
        if existing is not None:
            app.store.set(("users", existing, "is_admin"), True)
            print(f"promoted {email} to admin")
        else:
            password = secrets.token_urlsafe(12)
            user_id, vt = app.auth.register("Admin", "User", email, password)
            app.auth.verify_email(vt.token)
            app.store.set(("users", user_id, "is_admin"), True)
            print(f"created admin {email}")
            print(f"password: {password}")
        app.snapshot_now(force=True)
    finally:
        app.close()
    return 0


def _cmd_outbox(args) -> int:
    config = load_config(args.config)
    outbox = config.outbox_path
    if args.which == "mail":
        mails = sorted(outbox.glob("*.eml"))
        if not mails:
            return 0
        sys.stdout.write(mails[-1].read_text(encoding="utf-8"))
        return 0
    path = outbox / ("sms-outbox.log" if args.which == "sms" else "push-outbox.log")
    if not path.exists():
        return 0
    lines = path.read_text(encoding="utf-8").splitlines()
    for line in lines[-args.lines:]:
        print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
