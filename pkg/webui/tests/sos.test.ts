import { describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { runSosFlow } from "../src/sos.js";
import type { SosAlert, SosUi } from "../src/sos.js";

const ALERT: SosAlert = {
  alert_id: "a1",
  user_id: "u1",
  lat: 23.8103,
  lon: 90.4125,
  triggered_at: 1700000000,
  deliveries: [
    { number: "+111", status: "sent", message_id: "m1" },
    { number: "+222", status: "sent", message_id: "m2" },
  ],
};

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

function makeUi() {
  return {
    showConfirmation: vi.fn(),
    showManualForm: vi.fn(),
    gotoContacts: vi.fn(),
    showError: vi.fn(),
  } satisfies SosUi;
}

describe("runSosFlow", () => {
  it("posts the browser coordinates and confirms per-contact statuses", async () => {
    const fetchFn = vi.fn(async (url: RequestInfo | URL, init?: RequestInit) => {
      expect(String(url)).toBe("/sos");
      expect(JSON.parse(String(init?.body))).toEqual({ lat: 23.8103, lon: 90.4125 });
      return jsonResponse(200, ALERT);
    });
    const api = new ApiClient("", fetchFn as unknown as typeof fetch);
    api.token = "tok";
    const ui = makeUi();

    const outcome = await runSosFlow(api, async () => ({ lat: 23.8103, lon: 90.4125 }), ui);

    expect(outcome).toBe("sent");
    expect(fetchFn).toHaveBeenCalledTimes(1);
    expect(ui.showConfirmation).toHaveBeenCalledWith(ALERT);
    expect(ui.showManualForm).not.toHaveBeenCalled();
  });

  it("falls back to the manual form when geolocation is denied", async () => {
    const fetchFn = vi.fn();
    const api = new ApiClient("", fetchFn as unknown as typeof fetch);
    const ui = makeUi();

    const outcome = await runSosFlow(api, () => Promise.reject(new Error("denied")), ui);

    expect(outcome).toBe("manual-entry");
    expect(ui.showManualForm).toHaveBeenCalled();
    expect(fetchFn).not.toHaveBeenCalled();
  });

  it("redirects to the contacts panel when none are set", async () => {
    const fetchFn = vi.fn(async () =>
      jsonResponse(409, { error: { code: "NoContactsSet", message: "set contacts first" } }),
    );
    const api = new ApiClient("", fetchFn as unknown as typeof fetch);
    const ui = makeUi();

    const outcome = await runSosFlow(api, async () => ({ lat: 1, lon: 2 }), ui);

    expect(outcome).toBe("no-contacts");
    expect(ui.gotoContacts).toHaveBeenCalled();
    expect(ui.showConfirmation).not.toHaveBeenCalled();
  });
});
