import type { ConversationLog } from "./state.js";
import type { Delivery, NearbyPoi, PresenceInfo, SearchRow, SosAlert } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderDeliveries(container: HTMLElement, alert: SosAlert): void {
  container.replaceChildren();
  const doc = container.ownerDocument;
  const heading = el(doc, "p", "sos-confirm-heading",
    `Alert sent at ${new Date(alert.triggered_at * 1000).toLocaleTimeString()}`);
  container.appendChild(heading);
  const list = el(doc, "ul", "delivery-list");
  for (const delivery of alert.deliveries) {
    const item = el(doc, "li", `delivery delivery-${delivery.status}`);
    item.appendChild(el(doc, "span", "delivery-number", delivery.number));
    item.appendChild(el(doc, "span", "delivery-status", delivery.status));
    list.appendChild(item);
  }
  container.appendChild(list);
}

export function renderDeliveryFailure(container: HTMLElement, message: string): void {
  container.replaceChildren();
  container.appendChild(el(container.ownerDocument, "p", "sos-error", message));
}

const CATEGORY_LABEL: Record<NearbyPoi["category"], string> = {
  hospital: "Hospital",
  police: "Police",
  fire: "Fire service",
};

export function renderNearby(container: HTMLElement, pois: NearbyPoi[]): void {
  container.replaceChildren();
  const doc = container.ownerDocument;
  if (!pois.length) {
    container.appendChild(el(doc, "p", "nearby-empty", "No places of this kind within the search radius."));
    return;
  }
  const list = el(doc, "ol", "nearby-list");
  for (const poi of pois) {
    const row = el(doc, "li", `nearby-row nearby-${poi.category}`);
    row.appendChild(el(doc, "span", "nearby-badge", CATEGORY_LABEL[poi.category]));
    row.appendChild(el(doc, "span", "nearby-name", poi.name));
    row.appendChild(el(doc, "span", "nearby-distance", formatDistance(poi.distance_m)));
    list.appendChild(row);
  }
  container.appendChild(list);
}

export function formatDistance(meters: number): string {
  return meters < 1000 ? `${Math.round(meters)} m` : `${(meters / 1000).toFixed(1)} km`;
}

/** Plot markers on an abstract backdrop: plain equirectangular projection
 * centered on the user, no external tiles. */
export function drawMarkers(
  canvas: HTMLCanvasElement,
  center: { lat: number; lon: number },
  pois: NearbyPoi[],
  radiusM: number,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#10212f";
  ctx.fillRect(0, 0, width, height);
  ctx.strokeStyle = "#28455c";
  ctx.beginPath();
  ctx.arc(width / 2, height / 2, Math.min(width, height) / 2 - 8, 0, Math.PI * 2);
  ctx.stroke();
  const metersPerDegLat = 111_194.9;
  const scale = (Math.min(width, height) / 2 - 12) / radiusM;
  const colors = { hospital: "#e4572e", police: "#17bebb", fire: "#ffc914" } as const;
  for (const poi of pois) {
    const dy = (poi.lat - center.lat) * metersPerDegLat;
    const dx = (poi.lon - center.lon) * metersPerDegLat * Math.cos((center.lat * Math.PI) / 180);
    const x = width / 2 + dx * scale;
    const y = height / 2 - dy * scale;
    ctx.fillStyle = colors[poi.category];
    ctx.beginPath();
    ctx.arc(x, y, 5, 0, Math.PI * 2);
    ctx.fill();
  }
  ctx.fillStyle = "#ffffff";
  ctx.beginPath();
  ctx.arc(width / 2, height / 2, 4, 0, Math.PI * 2);
  ctx.fill();
}

/** Re-renders the whole conversation from the log: the log already dedups
 * and orders by push ID, so the DOM can never show a message twice or out
 * of order, no matter how fetches and stream events interleaved. */
export function renderMessages(
  container: HTMLElement,
  log: ConversationLog,
  selfId: string,
): number {
  container.replaceChildren();
  const doc = container.ownerDocument;
  for (const message of log.ordered()) {
    const row = el(doc, "div",
      message.sender_id === selfId ? "message message-own" : "message message-peer");
    row.dataset["messageId"] = message.id;
    row.appendChild(el(doc, "span", "message-sender", message.sender_name));
    row.appendChild(el(doc, "span", "message-body", message.body));
    row.appendChild(el(doc, "time", "message-time",
      new Date(message.sent_at * 1000).toLocaleTimeString()));
    container.appendChild(row);
  }
  container.scrollTop = container.scrollHeight;
  return container.childElementCount;
}

export function presenceBadge(badge: HTMLElement, presence: PresenceInfo): void {
  badge.className = `presence-badge presence-${presence.state}`;
  badge.textContent =
    presence.state === "active"
      ? "active"
      : presence.seconds_since_seen === null
        ? "away"
        : `away ${formatAge(presence.seconds_since_seen)}`;
}

function formatAge(seconds: number): string {
  if (seconds < 60) return `${seconds}s`;
  if (seconds < 3600) return `${Math.floor(seconds / 60)}m`;
  return `${Math.floor(seconds / 3600)}h`;
}

export function renderSearchResults(
  container: HTMLElement,
  rows: SearchRow[],
  selfId: string,
  onPick: (row: SearchRow) => void,
): void {
  container.replaceChildren();
  const doc = container.ownerDocument;
  const visible = rows.filter((row) => row.user_id !== selfId);
  if (!visible.length) {
    container.appendChild(el(doc, "p", "search-empty", "Nobody matched your search."));
    return;
  }
  for (const row of visible) {
    const button = el(doc, "button", "search-row");
    button.type = "button";
    button.appendChild(el(doc, "span", "search-name", row.display_name));
    const badge = el(doc, "span", "presence-badge");
    presenceBadge(badge, row.presence);
    button.appendChild(badge);
    button.addEventListener("click", () => onPick(row));
    container.appendChild(button);
  }
}

export function renderContactsEditor(
  container: HTMLElement,
  numbers: string[] | null,
): HTMLInputElement[] {
  container.replaceChildren();
  const doc = container.ownerDocument;
  const inputs: HTMLInputElement[] = [];
  for (let i = 0; i < 3; i += 1) {
    const input = el(doc, "input", "contact-input");
    input.type = "tel";
    input.placeholder = `Contact ${i + 1} (E.164, e.g. +8801712345678)`;
    input.value = numbers?.[i] ?? "";
    inputs.push(input);
    container.appendChild(input);
  }
  return inputs;
}
