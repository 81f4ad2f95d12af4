import pytest

from safeguard.app import App
from safeguard.config import ServiceConfig
from safeguard.gateway import GatewayServer


def read_mail_token(outbox_dir, email=None):
    """Pull the verification token out of the newest matching .eml file."""
    mails = sorted(outbox_dir.glob("*.eml"))
    assert mails, f"no mail in {outbox_dir}"
    for path in reversed(mails):
        lines = path.read_text(encoding="utf-8").splitlines()
        if email is None or lines[0] == f"To: {email}":
            return [ln for ln in lines if ln.strip()][-1]
    raise AssertionError(f"no mail for {email}")


@pytest.fixture
def make_config(tmp_path):
    def factory(**overrides):
        defaults = dict(
            bind_address="127.0.0.1:0",
            data_dir=str(tmp_path / "data"),
            password_iterations=4096,
            dispatch_interval_seconds=0.2,
            snapshot_interval_seconds=60.0,
        )
        defaults.update(overrides)
        return ServiceConfig(**defaults)
    return factory


@pytest.fixture
def make_server(make_config):
    servers = []

    def factory(**overrides):
        server = GatewayServer(App(make_config(**overrides))).start()
        servers.append(server)
        return server

    yield factory
    for server in servers:
        try:
            server.stop()
        except Exception:
            pass


@pytest.fixture
def make_app(make_config):
    apps = []

    def factory(**overrides):
        app = App(make_config(**overrides))
        apps.append(app)
        return app

    yield factory
    for app in apps:
        try:
            app.close()
        except Exception:
            pass
