import { ApiClient, ApiError } from "./api.js";
import { ConversationLog, defaultPanel, mintDeviceToken } from "./state.js";
import { EventStream } from "./stream.js";
import { browserGeoProvider, runSosFlow, submitSos } from "./sos.js";
import type { Panel, SearchRow, SessionInfo, StreamEvent } from "./types.js";
import {
  drawMarkers,
  presenceBadge,
  renderContactsEditor,
  renderDeliveries,
  renderDeliveryFailure,
  renderMessages,
  renderNearby,
  renderSearchResults,
} from "./views.js";

const PANELS: Panel[] = ["location", "emergency", "tools", "chat", "search"];

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

class SafeguardApp {
  private api = new ApiClient("");
  private session: SessionInfo | null = null;
  private contactsSet = false;
  private stream: EventStream | null = null;
  private chatLog = new ConversationLog();
  private chatPeer: SearchRow | null = null;
  private coords = { lat: 23.8103, lon: 90.4125 }; // falls back to Dhaka center
  private nearbyCategory = "all";

  start(): void {
    this.wireSplash();
    this.wireAuthForms();
    this.wireNav();
    this.wireSos();
    this.wireNearby();
    this.wireSearch();
    this.wireChat();
    this.wireContacts();
  }

  // -- splash and auth ---------------------------------------------------------

  private wireSplash(): void {
    const splash = byId<HTMLDivElement>("splash");
    const skip = byId<HTMLButtonElement>("splash-skip");
    const hide = () => splash.classList.add("hidden");
    skip.addEventListener("click", hide);
    setTimeout(hide, 2200);
  }

  private wireAuthForms(): void {
    const registerForm = byId<HTMLFormElement>("register-form");
    const verifyForm = byId<HTMLFormElement>("verify-form");
    const loginForm = byId<HTMLFormElement>("login-form");
    const note = byId<HTMLParagraphElement>("auth-note");

    registerForm.addEventListener("submit", (event) => {
      event.preventDefault();
      const data = new FormData(registerForm);
      this.api
        .register(
          String(data.get("first")),
          String(data.get("last")),
          String(data.get("email")),
          String(data.get("password")),
        )
        .then(() => {
          note.textContent =
            "Registered. Check the mail outbox for your verification token, then verify below.";
        })
        .catch((error) => this.showAuthError(error));
    });

    verifyForm.addEventListener("submit", (event) => {
      event.preventDefault();
      const data = new FormData(verifyForm);
      this.api
        .verify(String(data.get("token")).trim())
        .then(() => {
          note.textContent = "Email verified. You can log in now.";
        })
        .catch((error) => this.showAuthError(error));
    });

    loginForm.addEventListener("submit", (event) => {
      event.preventDefault();
      const data = new FormData(loginForm);
      this.api
        .login(String(data.get("email")), String(data.get("password")))
        .then((session) => this.onLoggedIn(session))
        .catch((error) => this.showAuthError(error));
    });

    byId<HTMLButtonElement>("logout").addEventListener("click", () => this.logout());
  }

  private showAuthError(error: unknown): void {
    byId<HTMLParagraphElement>("auth-note").textContent =
      error instanceof ApiError ? `${error.code}: ${error.message}` : String(error);
  }

  private async onLoggedIn(session: SessionInfo): Promise<void> {
    this.session = session;
    byId<HTMLDivElement>("auth-screen").classList.add("hidden");
    byId<HTMLDivElement>("app-screen").classList.remove("hidden");
    byId<HTMLSpanElement>("whoami").textContent =
      `${session.user.first_name} ${session.user.last_name}`;

    const deviceToken = mintDeviceToken(localStorage);
    this.api.registerDeviceToken(deviceToken).catch(() => undefined);

    const contacts = await this.api.getContacts().catch(() => null);
    this.contactsSet = Array.isArray(contacts) && contacts.length > 0;
    this.renderContactsPanel(contacts);
    this.showPanel(defaultPanel(this.contactsSet));
    this.openStream();
    this.refreshNearby();
  }

  private logout(): void {
    this.stream?.stop();
    this.stream = null;
    this.session = null;
    this.api.token = null;
    localStorage.removeItem("safeguard-device-token");
    byId<HTMLDivElement>("app-screen").classList.add("hidden");
    byId<HTMLDivElement>("auth-screen").classList.remove("hidden");
  }

  // -- panel flipper -------------------------------------------------------------

  private wireNav(): void {
    for (const panel of PANELS) {
      byId<HTMLButtonElement>(`nav-${panel}`).addEventListener("click", () =>
        this.showPanel(panel),
      );
    }
  }

  private showPanel(panel: Panel): void {
    for (const name of PANELS) {
      byId<HTMLDivElement>(`panel-${name}`).classList.toggle("hidden", name !== panel);
      byId<HTMLButtonElement>(`nav-${name}`).classList.toggle("active", name === panel);
    }
    if (panel === "chat" && this.chatPeer) {
      this.api.checkpoint("chat-open").catch(() => undefined);
    }
    if (panel === "tools") {
      this.api.checkpoint("profile-open").catch(() => undefined);
    }
  }

  // -- SOS -------------------------------------------------------------------------

  private wireSos(): void {
    const confirmation = byId<HTMLDivElement>("sos-confirmation");
    const manual = byId<HTMLFormElement>("sos-manual-form");
    const ui = {
      showConfirmation: (alert: Parameters<typeof renderDeliveries>[1]) => {
        manual.classList.add("hidden");
        renderDeliveries(confirmation, alert);
      },
      showManualForm: () => manual.classList.remove("hidden"),
      gotoContacts: () => this.showPanel("emergency"),
      showError: (message: string) => renderDeliveryFailure(confirmation, message),
    };

    byId<HTMLButtonElement>("sos-button").addEventListener("click", () => {
      void runSosFlow(this.api, this.geoProvider(), ui);
    });

    manual.addEventListener("submit", (event) => {
      event.preventDefault();
      const data = new FormData(manual);
      const lat = Number(data.get("lat"));
      const lon = Number(data.get("lon"));
      void submitSos(this.api, { lat, lon }, ui);
    });
  }

  private geoProvider() {
    if (navigator.geolocation) {
      const browser = browserGeoProvider(navigator.geolocation);
      return async () => {
        const coords = await browser();
        this.coords = coords;
        return coords;
      };
    }
    return () => Promise.reject(new Error("geolocation unavailable"));
  }

  // -- nearby -----------------------------------------------------------------------

  private wireNearby(): void {
    byId<HTMLSelectElement>("nearby-category").addEventListener("change", (event) => {
      this.nearbyCategory = (event.target as HTMLSelectElement).value;
      this.refreshNearby();
    });
    byId<HTMLButtonElement>("nearby-locate").addEventListener("click", async () => {
      try {
        this.coords = await this.geoProvider()();
      } catch {
        // keep previous coordinates
      }
      this.refreshNearby();
    });
  }

  private refreshNearby(): void {
    const list = byId<HTMLDivElement>("nearby-results");
    const radius = 5000;
    this.api
      .nearby(this.coords.lat, this.coords.lon, this.nearbyCategory, 10, radius)
      .then((pois) => {
        renderNearby(list, pois);
        drawMarkers(byId<HTMLCanvasElement>("nearby-map"), this.coords, pois, radius);
      })
      .catch((error) => {
        list.replaceChildren();
        const hint = document.createElement("p");
        hint.className = "nearby-empty";
        hint.textContent =
          error instanceof ApiError && error.code === "EmptyIndex"
            ? "No place data loaded yet: seed the server with a POI file."
            : `Nearby lookup failed: ${error}`;
        list.appendChild(hint);
      });
  }

  // -- contacts ------------------------------------------------------------------------

  private wireContacts(): void {
    byId<HTMLFormElement>("contacts-form").addEventListener("submit", (event) => {
      event.preventDefault();
      const inputs = Array.from(
        byId<HTMLDivElement>("contacts-editor").querySelectorAll("input"),
      ) as HTMLInputElement[];
      const numbers = inputs.map((input) => input.value.trim()).filter(Boolean);
      this.api
        .setContacts(numbers)
        .then((stored) => {
          this.contactsSet = stored.length > 0;
          byId<HTMLParagraphElement>("contacts-note").textContent =
            `Saved ${stored.length} contact${stored.length === 1 ? "" : "s"}.`;
        })
        .catch((error) => {
          byId<HTMLParagraphElement>("contacts-note").textContent =
            error instanceof ApiError ? `${error.code}: ${error.message}` : String(error);
        });
    });
  }

  private renderContactsPanel(numbers: string[] | null): void {
    renderContactsEditor(byId<HTMLDivElement>("contacts-editor"), numbers);
    byId<HTMLParagraphElement>("contacts-note").textContent = numbers?.length
      ? `${numbers.length} emergency contact${numbers.length === 1 ? "" : "s"} set.`
      : "No emergency contacts yet: add up to three numbers.";
  }

  // -- search ---------------------------------------------------------------------------

  private wireSearch(): void {
    const form = byId<HTMLFormElement>("search-form");
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      const query = byId<HTMLInputElement>("search-input").value;
      this.api
        .searchUsers(query)
        .then((rows) => {
          renderSearchResults(
            byId<HTMLDivElement>("search-results"),
            rows,
            this.session?.user.id ?? "",
            (row) => this.openChat(row),
          );
        })
        .catch(() => undefined);
    });
  }

  // -- chat -----------------------------------------------------------------------------

  private wireChat(): void {
    byId<HTMLFormElement>("chat-form").addEventListener("submit", (event) => {
      event.preventDefault();
      const input = byId<HTMLInputElement>("chat-input");
      const body = input.value.trim();
      if (!body || !this.chatPeer) return;
      input.value = "";
      this.api
        .sendMessage(this.chatPeer.user_id, body)
        .then((message) => {
          this.chatLog.add(message);
          this.renderChat();
        })
        .catch(() => undefined);
    });
  }

  private openChat(peer: SearchRow): void {
    this.chatPeer = peer;
    this.chatLog = new ConversationLog();
    byId<HTMLSpanElement>("chat-peer-name").textContent = peer.display_name;
    presenceBadge(byId<HTMLSpanElement>("chat-peer-presence"), peer.presence);
    this.showPanel("chat");
    this.api.checkpoint("chat-open").catch(() => undefined);
    void this.loadHistory();
    this.api
      .presence(peer.user_id)
      .then((presence) => presenceBadge(byId<HTMLSpanElement>("chat-peer-presence"), presence))
      .catch(() => undefined);
  }

  private async loadHistory(): Promise<void> {
    if (!this.chatPeer) return;
    const { messages } = await this.api.fetchHistory(
      this.chatPeer.user_id,
      10,
      this.chatLog.lastId,
    );
    this.chatLog.addAll(messages);
    this.renderChat();
  }

  private renderChat(): void {
    renderMessages(
      byId<HTMLDivElement>("chat-messages"),
      this.chatLog,
      this.session?.user.id ?? "",
    );
  }

  // -- stream ------------------------------------------------------------------------------

  private openStream(): void {
    if (!this.session) return;
    this.stream?.stop();
    this.stream = new EventStream(
      "/stream",
      this.session.token,
      {
        onEvent: (event) => this.onStreamEvent(event),
        onReconnect: () => this.loadHistory(),
        onStatus: (connected) => {
          byId<HTMLSpanElement>("stream-status").className = connected
            ? "stream-on"
            : "stream-off";
        },
      },
    );
    this.stream.start();
  }

  private onStreamEvent(event: StreamEvent): void {
    if (event.type === "message") {
      if (this.chatPeer && event.peer === this.chatPeer.user_id) {
        this.chatLog.add({
          id: event.id,
          sender_id: event.sender_id,
          sender_name: event.sender_name,
          body: event.body,
          sent_at: event.sent_at,
        });
        this.renderChat();
      }
    } else if (event.type === "presence") {
      if (this.chatPeer && event.user_id === this.chatPeer.user_id) {
        presenceBadge(byId<HTMLSpanElement>("chat-peer-presence"), {
          state: event.state,
          seconds_since_seen: event.seconds_since_seen,
        });
      }
    } else if (event.type === "sos") {
      renderDeliveries(byId<HTMLDivElement>("sos-confirmation"), {
        alert_id: event.alert_id,
        user_id: this.session?.user.id ?? "",
        lat: 0,
        lon: 0,
        triggered_at: event.triggered_at,
        deliveries: event.deliveries,
      });
    }
  }
}

document.addEventListener("DOMContentLoaded", () => {
  new SafeguardApp().start();
});
