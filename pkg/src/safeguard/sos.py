"""Emergency contacts and SOS fan-out.

One trigger sends the caller's location to every stored contact through the
SMS gateway port; per-contact failures are recorded, never propagated, so a
flaky carrier cannot mute the rest of the fan-out. Alerts are recorded under
/alerts/<user>/<push-id> so history reads back newest first for free.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from .errors import EmptyList, NoContactsSet, TooManyContacts
from .geo import GeoPoint
from .ports import SmsDeliveryError
from .treestore import ABSENT, PushIdGenerator, TreeStore

CONTACTS_PATH = "contacts"
ALERTS_PATH = "alerts"

MAX_CONTACTS = 3

MESSAGE_TEMPLATE = (
    "EMERGENCY from {name}: I need help. "
    "My location: {lat:.6f},{lon:.6f} https://maps.example/?q={lat:.6f},{lon:.6f}"
)


@dataclass(frozen=True)
class Delivery:
    number: str
    status: str  # sent | failed
    message_id: str = ""


@dataclass(frozen=True)
class SosAlert:
    alert_id: str
    user_id: str
    location: GeoPoint
    triggered_at: int
    deliveries: tuple[Delivery, ...]


class SosService:
    def __init__(self, store: TreeStore, auth, gateway, push_ids: PushIdGenerator):
        self._store = store
        self._auth = auth
        self._gateway = gateway
        self._push_ids = push_ids

    # -- contacts ---------------------------------------------------------------

    def set_contacts(self, user_id: str, numbers) -> list[str]:
        numbers = [str(n).strip() for n in numbers]
        if any(not n for n in numbers):
            raise EmptyList("contact numbers must be non-empty")
        if not numbers:
            raise EmptyList("provide at least one contact number")
        if len(numbers) > MAX_CONTACTS:
            raise TooManyContacts(f"at most {MAX_CONTACTS} contacts are kept")
        self._auth.get_user(user_id)
        self._store.set((CONTACTS_PATH, user_id), numbers)
        return numbers

    def get_contacts(self, user_id: str):
        """Current list in stored order, or None when never set."""
        node = self._store.get((CONTACTS_PATH, user_id))
        if node is ABSENT:
            return None
        return [node[k] for k in sorted(node, key=int)]

    # -- alerts -----------------------------------------------------------------

    def trigger_sos(self, user_id: str, location: GeoPoint, now: int | None = None) -> SosAlert:
        now = int(time.time()) if now is None else now
        user = self._auth.get_user(user_id)
        contacts = self.get_contacts(user_id)
        if not contacts:
            raise NoContactsSet("set emergency contacts before triggering an SOS")

        body = MESSAGE_TEMPLATE.format(name=user.display_name, lat=location.lat, lon=location.lon)
        deliveries = []
        for number in contacts:
            try:
                message_id = self._gateway.send(number, body)
                deliveries.append(Delivery(number, "sent", message_id))
            except SmsDeliveryError:
                deliveries.append(Delivery(number, "failed"))

        alert_id = self._push_ids.next_id(now * 1000)
        self._store.set((ALERTS_PATH, user_id, alert_id), {
            "user_id": user_id,
            "lat": location.lat,
            "lon": location.lon,
            "triggered_at": now,
            "deliveries": [
                {"number": d.number, "status": d.status, "message_id": d.message_id}
                for d in deliveries
            ],
        })
        return SosAlert(alert_id, user_id, location, now, tuple(deliveries))

    def list_alerts(self, user_id: str) -> list[SosAlert]:
        """All alerts for the user, newest first (push-ID order is time order)."""
        node = self._store.get((ALERTS_PATH, user_id))
        if node is ABSENT:
            return []
        alerts = []
        for alert_id in sorted(node, reverse=True):
            alerts.append(_alert_from_tree(alert_id, node[alert_id]))
        return alerts


def _alert_from_tree(alert_id: str, record: dict) -> SosAlert:
    raw = record.get("deliveries", {})
    deliveries = tuple(
        Delivery(d["number"], d["status"], d.get("message_id", ""))
        for d in (raw[k] for k in sorted(raw, key=int))
    )
    return SosAlert(
        alert_id=alert_id,
        user_id=record["user_id"],
        location=GeoPoint(record["lat"], record["lon"]),
        triggered_at=record["triggered_at"],
        deliveries=deliveries,
    )
