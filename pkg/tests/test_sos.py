import random
import re

import pytest

from safeguard.auth import AuthService
from safeguard.errors import EmptyList, NoContactsSet, TooManyContacts
from safeguard.geo import GeoPoint
from safeguard.ports import FileSmsGateway, MemoryMailer, MemorySmsGateway
from safeguard.sos import SosService
from safeguard.treestore import PushIdGenerator, TreeStore

LOCATION_RE = re.compile(r"My location: (-?\d+\.\d{6}),(-?\d+\.\d{6}) ")


@pytest.fixture
def store():
    s = TreeStore()
    yield s
    s.close()


@pytest.fixture
def auth(store):
    return AuthService(store, MemoryMailer(), iterations=4096)


@pytest.fixture
def gateway():
    return MemorySmsGateway()


@pytest.fixture
def sos(store, auth, gateway):
    return SosService(store, auth, gateway, PushIdGenerator(random.Random(2)))


@pytest.fixture
def user(auth):
    user_id, vt = auth.register("Shanta", "Khatun", "s@x.y", "hunter22")
    auth.verify_email(vt.token)
    return user_id


class TestContacts:
    def test_three_numbers_stored_in_order(self, sos, user):
        numbers = ["+8801711111111", "+8801722222222", "+8801733333333"]
        sos.set_contacts(user, numbers)
        assert sos.get_contacts(user) == numbers

    def test_four_numbers_rejected(self, sos, user):
        with pytest.raises(TooManyContacts):
            sos.set_contacts(user, ["+1", "+2", "+3", "+4"])

    def test_single_number_accepted(self, sos, user):
        sos.set_contacts(user, ["+8801711111111"])
        assert sos.get_contacts(user) == ["+8801711111111"]

    def test_empty_or_blank_rejected(self, sos, user):
        with pytest.raises(EmptyList):
            sos.set_contacts(user, [])
        with pytest.raises(EmptyList):
            sos.set_contacts(user, ["+123", "  "])

    def test_fresh_user_is_unset(self, sos, user):
        assert sos.get_contacts(user) is None

    def test_replacement_keeps_newest_only(self, sos, user):
        sos.set_contacts(user, ["+111111", "+222222"])
        sos.set_contacts(user, ["+333333"])
        assert sos.get_contacts(user) == ["+333333"]


class TestTrigger:
    def test_fan_out_matches_contact_count(self, sos, gateway, user):
        sos.set_contacts(user, ["+111111", "+222222"])
        alert = sos.trigger_sos(user, GeoPoint(23.8103, 90.4125), now=1000)
        assert len(gateway.sent) == 2
        assert [d.status for d in alert.deliveries] == ["sent", "sent"]
        for _, body in gateway.sent:
            assert "23.810300,90.412500" in body
            assert body.startswith("EMERGENCY from Shanta Khatun:")
            assert "https://maps.example/?q=23.810300,90.412500" in body

    def test_partial_gateway_failure_recorded(self, store, auth, user):
        gateway = MemorySmsGateway(fail_numbers={"+222222"})
        sos = SosService(store, auth, gateway, PushIdGenerator(random.Random(3)))
        sos.set_contacts(user, ["+111111", "+222222"])
        alert = sos.trigger_sos(user, GeoPoint(1, 2), now=1000)
        assert [d.status for d in alert.deliveries] == ["sent", "failed"]
        assert len(gateway.sent) == 1
        stored = sos.list_alerts(user)
        assert len(stored) == 1
        assert [d.status for d in stored[0].deliveries] == ["sent", "failed"]

    def test_unset_contacts_rejected(self, sos, user):
        with pytest.raises(NoContactsSet):
            sos.trigger_sos(user, GeoPoint(0, 1), now=1)

    def test_alert_recorded_in_tree(self, sos, store, user):
        sos.set_contacts(user, ["+111111"])
        alert = sos.trigger_sos(user, GeoPoint(23.8103, 90.4125), now=1234)
        node = store.get(("alerts", user, alert.alert_id))
        assert node["triggered_at"] == 1234
        assert node["lat"] == 23.8103
        assert node["user_id"] == user

    def test_body_round_trips_coordinates_at_6_decimals(self, sos, gateway, user):
        sos.set_contacts(user, ["+111111"])
        rng = random.Random(8)
        for i in range(50):
            point = GeoPoint(rng.uniform(-90, 90), rng.uniform(-180, 180))
            sos.trigger_sos(user, point, now=2000 + i)
            body = gateway.sent[-1][1]
            match = LOCATION_RE.search(body)
            assert match, body
            assert match.group(1) == f"{point.lat:.6f}"
            assert match.group(2) == f"{point.lon:.6f}"


class TestAlertLog:
    def test_no_alerts_is_empty(self, sos, user):
        assert sos.list_alerts(user) == []

    def test_newest_first(self, sos, user):
        sos.set_contacts(user, ["+111111"])
        ids = [sos.trigger_sos(user, GeoPoint(0, t), now=t).alert_id for t in (1, 2, 3)]
        got = sos.list_alerts(user)
        assert [a.alert_id for a in got] == list(reversed(ids))
        assert [a.triggered_at for a in got] == [3, 2, 1]

    def test_many_alerts_strictly_descending(self, sos, user):
        sos.set_contacts(user, ["+111111"])
        rng = random.Random(9)
        now = 100
        for _ in range(500):
            now += rng.choice([0, 0, 1])
            sos.trigger_sos(user, GeoPoint(10, 20), now=now)
        alerts = sos.list_alerts(user)
        assert len(alerts) == 500
        ids = [a.alert_id for a in alerts]
        assert ids == sorted(ids, reverse=True)
        assert len(set(ids)) == 500


class TestFileGateway:
    def test_outbox_line_format(self, store, auth, user, tmp_path):
        log_path = tmp_path / "sms-outbox.log"
        sos = SosService(store, auth, FileSmsGateway(log_path), PushIdGenerator(random.Random(5)))
        sos.set_contacts(user, ["+8801711111111", "+8801722222222"])
        sos.trigger_sos(user, GeoPoint(23.8103, 90.4125), now=1000)
        lines = log_path.read_text().strip().split("\n")
        assert len(lines) == 2
        for line, number in zip(lines, ["+8801711111111", "+8801722222222"]):
            stamp, num, body = line.split("\t")
            assert num == number
            assert "T" in stamp and "+" in stamp or "Z" in stamp  # iso8601 with offset
            assert "23.810300,90.412500" in body

    def test_deterministic_failure_fraction(self, store, auth, user, tmp_path):
        gateway = FileSmsGateway(tmp_path / "sms.log", fail_every=3)
        sos = SosService(store, auth, gateway, PushIdGenerator(random.Random(6)))
        sos.set_contacts(user, ["+1111", "+2222", "+3333"])
        alert = sos.trigger_sos(user, GeoPoint(0, 0), now=5)
        assert [d.status for d in alert.deliveries] == ["sent", "sent", "failed"]
        assert len((tmp_path / "sms.log").read_text().strip().split("\n")) == 2
