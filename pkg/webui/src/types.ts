export interface UserProfile {
  id: string;
  first_name: string;
  last_name: string;
  email: string;
  is_admin?: boolean;
}

export interface SessionInfo {
  token: string;
  expiresAt: number;
  user: UserProfile;
}

export interface Delivery {
  number: string;
  status: "sent" | "failed";
  message_id: string;
}

export interface SosAlert {
  alert_id: string;
  user_id: string;
  lat: number;
  lon: number;
  triggered_at: number;
  deliveries: Delivery[];
}

export interface NearbyPoi {
  id: string;
  name: string;
  category: "hospital" | "police" | "fire";
  lat: number;
  lon: number;
  distance_m: number;
}

export interface ChatMessage {
  id: string;
  sender_id: string;
  sender_name: string;
  body: string;
  sent_at: number;
}

export interface PresenceInfo {
  state: "active" | "away";
  seconds_since_seen: number | null;
}

export interface SearchRow {
  user_id: string;
  display_name: string;
  presence: PresenceInfo;
}

export interface MessageEvent_ {
  type: "message";
  conversation: string;
  peer: string;
  id: string;
  sender_id: string;
  sender_name: string;
  body: string;
  sent_at: number;
}

export interface PresenceEvent {
  type: "presence";
  user_id: string;
  state: "active" | "away";
  seconds_since_seen: number | null;
}

export interface SosEvent {
  type: "sos";
  alert_id: string;
  triggered_at: number;
  deliveries: Delivery[];
}

export type StreamEvent = MessageEvent_ | PresenceEvent | SosEvent;

export type Panel = "location" | "emergency" | "tools" | "chat" | "search";

export interface Coordinates {
  lat: number;
  lon: number;
}
