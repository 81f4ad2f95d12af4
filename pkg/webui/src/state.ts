import type { ChatMessage, Panel } from "./types.js";

/** Emergency layout is the primary panel once contacts exist, otherwise the
 * location view is the default. */
export function defaultPanel(contactsSet: boolean): Panel {
  return contactsSet ? "emergency" : "location";
}

/** Message log with push-ID ordering and id-based dedup: history pages and
 * stream events can arrive interleaved or repeated (reconnects), the
 * rendered order must stay the server order. */
export class ConversationLog {
  private byId = new Map<string, ChatMessage>();

  add(message: ChatMessage): boolean {
    if (this.byId.has(message.id)) return false;
    this.byId.set(message.id, message);
    return true;
  }

  addAll(messages: Iterable<ChatMessage>): number {
    let added = 0;
    for (const message of messages) if (this.add(message)) added += 1;
    return added;
  }

  /** Push IDs are chronologically sortable, so string order is time order. */
  ordered(): ChatMessage[] {
    return [...this.byId.values()].sort((a, b) => (a.id < b.id ? -1 : a.id > b.id ? 1 : 0));
  }

  get lastId(): string | undefined {
    let last: string | undefined;
    for (const id of this.byId.keys()) if (last === undefined || id > last) last = id;
    return last;
  }

  get size(): number {
    return this.byId.size;
  }
}

interface TokenStorage {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
}

const DEVICE_TOKEN_KEY = "safeguard-device-token";

/** Random device token minted once per browser and reused across logins. */
export function mintDeviceToken(storage: TokenStorage, random: () => number = Math.random): string {
  const existing = storage.getItem(DEVICE_TOKEN_KEY);
  if (existing) return existing;
  const token = `web-${Array.from({ length: 24 }, () => Math.floor(random() * 36).toString(36)).join("")}`;
  storage.setItem(DEVICE_TOKEN_KEY, token);
  return token;
}

export function clearDeviceToken(storage: TokenStorage & { removeItem(key: string): void }): void {
  storage.removeItem(DEVICE_TOKEN_KEY);
}
