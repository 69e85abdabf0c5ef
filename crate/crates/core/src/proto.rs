//! Generated wire types and conversions to the domain types.

#[allow(clippy::all)]
mod generated {
    tonic::include_proto!("framegate");
}

pub use generated::*;

use crate::game::{ActionCommand, CharacterState, Facing, FrameState};

impl From<&CharacterState> for CharacterData {
    fn from(c: &CharacterState) -> Self {
        Self {
            hp: c.hp,
            x: c.x,
            facing: c.facing.sign(),
            last_action: c.last_action.as_str().to_owned(),
        }
    }
}

impl From<&CharacterData> for CharacterState {
    fn from(c: &CharacterData) -> Self {
        Self {
            hp: c.hp,
            x: c.x,
            facing: Facing::from_sign(c.facing),
            last_action: c.last_action.parse().unwrap_or_default(),
        }
    }
}

impl From<&FrameState> for FrameData {
    fn from(f: &FrameState) -> Self {
        Self {
            frame_index: f.frame_index,
            player_one: Some((&f.characters[0]).into()),
            player_two: Some((&f.characters[1]).into()),
        }
    }
}

impl From<&FrameData> for FrameState {
    fn from(f: &FrameData) -> Self {
        let character = |c: &Option<CharacterData>| {
            c.as_ref()
                .map(CharacterState::from)
                .unwrap_or(CharacterState {
                    hp: 0,
                    x: 0,
                    facing: Facing::Right,
                    last_action: ActionCommand::Neutral,
                })
        };
        Self {
            frame_index: f.frame_index,
            characters: [character(&f.player_one), character(&f.player_two)],
        }
    }
}

impl From<&crate::game::PlayerGameData> for PlayerGameData {
    fn from(v: &crate::game::PlayerGameData) -> Self {
        Self {
            frame_index: v.frame_index,
            audio_data: v.audio_data.clone(),
            frame_data: v.frame_data.as_ref().map(FrameData::from),
            screen_data: v.screen_data.clone(),
        }
    }
}

impl From<PlayerGameData> for crate::game::PlayerGameData {
    fn from(v: PlayerGameData) -> Self {
        Self {
            frame_index: v.frame_index,
            audio_data: v.audio_data,
            frame_data: v.frame_data.as_ref().map(FrameState::from),
            screen_data: v.screen_data,
        }
    }
}

/// Top-level field numbers present in an encoded protobuf message, in wire
/// order. Used to inspect captured messages without decoding them.
pub fn wire_field_numbers(mut buf: &[u8]) -> Result<Vec<u32>, prost::DecodeError> {
    use prost::encoding::{decode_key, decode_varint, WireType};
    let mut fields = Vec::new();
    while !buf.is_empty() {
        let (tag, wire_type) = decode_key(&mut buf)?;
        fields.push(tag);
        match wire_type {
            WireType::Varint => {
                decode_varint(&mut buf)?;
            }
            WireType::LengthDelimited => {
                let len = decode_varint(&mut buf)? as usize;
                if len > buf.len() {
                    return Err(prost::DecodeError::new("truncated field"));
                }
                buf = &buf[len..];
            }
            WireType::SixtyFourBit if buf.len() >= 8 => buf = &buf[8..],
            WireType::ThirtyTwoBit if buf.len() >= 4 => buf = &buf[4..],
            _ => return Err(prost::DecodeError::new("unsupported wire type")),
        }
    }
    Ok(fields)
}
