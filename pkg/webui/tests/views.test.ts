import { describe, expect, it } from "vitest";

import { ConversationLog } from "../src/state.js";
import type { ChatMessage, NearbyPoi, SosAlert } from "../src/types.js";
import { formatDistance, renderDeliveries, renderMessages, renderNearby } from "../src/views.js";

function container(): HTMLElement {
  const node = document.createElement("div");
  document.body.appendChild(node);
  return node;
}

function msg(id: string, body: string, sender = "peer"): ChatMessage {
  return { id, sender_id: sender, sender_name: "Peer P", body, sent_at: 1700000000 };
}

describe("renderMessages", () => {
  it("renders 35 paged messages exactly once in push-ID order across a reconnect", () => {
    const ids = Array.from({ length: 35 }, (_, i) => `-O${String(i).padStart(18, "0")}`);
    const log = new ConversationLog();
    const target = container();

    // four pages of ten
    for (let page = 0; page < 4; page += 1) {
      log.addAll(ids.slice(page * 10, page * 10 + 10).map((id) => msg(id, `m${id}`)));
      renderMessages(target, log, "self");
    }
    // reconnect refetches overlapping history: duplicates must not re-render
    log.addAll(ids.slice(20).map((id) => msg(id, `m${id}`)));
    const count = renderMessages(target, log, "self");

    expect(count).toBe(35);
    const rendered = Array.from(target.children).map(
      (row) => (row as HTMLElement).dataset["messageId"],
    );
    expect(rendered).toEqual([...ids].sort());
    expect(new Set(rendered).size).toBe(35);
  });

  it("marks own messages distinctly", () => {
    const log = new ConversationLog();
    log.add(msg("a", "mine", "self"));
    log.add(msg("b", "theirs", "peer"));
    const target = container();
    renderMessages(target, log, "self");
    expect(target.children[0]!.className).toContain("message-own");
    expect(target.children[1]!.className).toContain("message-peer");
  });
});

describe("renderNearby", () => {
  const poi = (id: string, category: NearbyPoi["category"], distance: number): NearbyPoi => ({
    id,
    name: `Place ${id}`,
    category,
    lat: 0,
    lon: 0,
    distance_m: distance,
  });

  it("renders rows in server order with distance labels and badges", () => {
    const target = container();
    renderNearby(target, [poi("a", "hospital", 120), poi("b", "police", 1500)]);
    const rows = target.querySelectorAll(".nearby-row");
    expect(rows.length).toBe(2);
    expect(rows[0]!.textContent).toContain("120 m");
    expect(rows[0]!.textContent).toContain("Hospital");
    expect(rows[1]!.textContent).toContain("1.5 km");
    expect(rows[1]!.textContent).toContain("Police");
  });

  it("shows an explicit empty state", () => {
    const target = container();
    renderNearby(target, []);
    expect(target.querySelector(".nearby-empty")?.textContent).toMatch(/no places/i);
  });
});

describe("renderDeliveries", () => {
  it("lists one status row per contact", () => {
    const alert: SosAlert = {
      alert_id: "x",
      user_id: "u",
      lat: 23.8103,
      lon: 90.4125,
      triggered_at: 1700000000,
      deliveries: [
        { number: "+111", status: "sent", message_id: "m1" },
        { number: "+222", status: "failed", message_id: "" },
      ],
    };
    const target = container();
    renderDeliveries(target, alert);
    const rows = target.querySelectorAll(".delivery");
    expect(rows.length).toBe(2);
    expect(rows[0]!.className).toContain("delivery-sent");
    expect(rows[1]!.className).toContain("delivery-failed");
    expect(rows[1]!.textContent).toContain("+222");
  });
});

describe("formatDistance", () => {
  it("switches to kilometers at 1000 m", () => {
    expect(formatDistance(999)).toBe("999 m");
    expect(formatDistance(1000)).toBe("1.0 km");
    expect(formatDistance(23500)).toBe("23.5 km");
  });
});
